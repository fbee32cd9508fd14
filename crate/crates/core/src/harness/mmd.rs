//! Squared maximum mean discrepancy with a Gaussian kernel.

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// Median pairwise distance over (a subsample of) the pooled points.
    Median,
    Fixed(f64),
}

const MEDIAN_POINTS_PER_SIDE: usize = 500;

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn rows(m: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    m.axis_iter(Axis(0)).map(|r| r.to_vec()).collect()
}

/// Symmetric in the two samples: the subsample takes the leading rows of
/// each side, so swapping them yields the same set of pairs.
fn median_bandwidth(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let pool: Vec<&Vec<f64>> = a
        .iter()
        .take(MEDIAN_POINTS_PER_SIDE)
        .chain(b.iter().take(MEDIAN_POINTS_PER_SIDE))
        .collect();
    let mut d: Vec<f64> = (0..pool.len())
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| sq_dist(pool[i], pool[j]).sqrt())
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len() % 2 == 0 { 0.5 * (d[mid - 1] + d[mid]) } else { d[mid] };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

fn kernel_sum(x: &[Vec<f64>], y: &[Vec<f64>], gamma: f64, skip_diagonal: bool) -> f64 {
    x.par_iter()
        .enumerate()
        .map(|(i, xi)| {
            y.iter()
                .enumerate()
                .filter(|&(j, _)| !(skip_diagonal && i == j))
                .map(|(_, yj)| (-gamma * sq_dist(xi, yj)).exp())
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

struct Prepared {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    gamma: f64,
}

fn prepare(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, bandwidth: Bandwidth) -> Result<Prepared> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::Config("mmd needs nonempty samples".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    let (a, b) = (rows(a), rows(b));
    let h = match bandwidth {
        Bandwidth::Median => median_bandwidth(&a, &b),
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(Error::Config(format!("bandwidth must be positive, got {h}"))),
    };
    Ok(Prepared {
        a,
        b,
        gamma: 1.0 / (2.0 * h * h),
    })
}

/// Unbiased estimate (within-sample diagonals excluded); may be slightly
/// negative. Needs at least two rows per sample.
pub fn mmd2_rbf(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, bandwidth: Bandwidth) -> Result<f64> {
    let p = prepare(a, b, bandwidth)?;
    let (m, n) = (p.a.len() as f64, p.b.len() as f64);
    if m < 2.0 || n < 2.0 {
        return Err(Error::Config("unbiased mmd needs at least two rows per sample".into()));
    }
    let kaa = kernel_sum(&p.a, &p.a, p.gamma, true) / (m * (m - 1.0));
    let kbb = kernel_sum(&p.b, &p.b, p.gamma, true) / (n * (n - 1.0));
    let kab = kernel_sum(&p.a, &p.b, p.gamma, false) / (m * n);
    Ok(kaa + kbb - 2.0 * kab)
}

/// Biased (V-statistic) estimate; nonnegative and exactly 0 for identical samples.
pub fn mmd2_rbf_biased(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, bandwidth: Bandwidth) -> Result<f64> {
    let p = prepare(a, b, bandwidth)?;
    let (m, n) = (p.a.len() as f64, p.b.len() as f64);
    let kaa = kernel_sum(&p.a, &p.a, p.gamma, false) / (m * m);
    let kbb = kernel_sum(&p.b, &p.b, p.gamma, false) / (n * n);
    let kab = kernel_sum(&p.a, &p.b, p.gamma, false) / (m * n);
    Ok((kaa + kbb - 2.0 * kab).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use ndarray::Array2;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, shift: f64, seed: u64) -> Array2<f64> {
        let mut rng = stream(seed, Stream::Audit);
        let mut x = Array2::from_shape_simple_fn((n, 2), || StandardNormal.sample(&mut rng));
        x.column_mut(0).mapv_inplace(|v| v + shift);
        x
    }

    #[test]
    fn identical_samples_biased_is_zero() {
        let a = gaussian(200, 0.0, 1);
        assert_eq!(mmd2_rbf_biased(a.view(), a.view(), Bandwidth::Median).unwrap(), 0.0);
    }

    #[test]
    fn separated_gaussians() {
        let a = gaussian(1000, 0.0, 1);
        let b = gaussian(1000, 5.0, 2);
        assert!(mmd2_rbf(a.view(), b.view(), Bandwidth::Fixed(1.0)).unwrap() > 0.5);
    }

    #[test]
    fn null_pair_is_near_zero() {
        let a = gaussian(1000, 0.0, 3);
        let b = gaussian(1000, 0.0, 4);
        let v = mmd2_rbf(a.view(), b.view(), Bandwidth::Median).unwrap();
        assert!(v.abs() < 0.01, "mmd2 {v}");
    }

    #[test]
    fn symmetric() {
        let a = gaussian(300, 0.0, 5);
        let b = gaussian(700, 1.0, 6);
        for bw in [Bandwidth::Median, Bandwidth::Fixed(0.7)] {
            let ab = mmd2_rbf(a.view(), b.view(), bw).unwrap();
            let ba = mmd2_rbf(b.view(), a.view(), bw).unwrap();
            assert!((ab - ba).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_computed_pair() {
        // a = {0, 1}, b = {0, 2}, h = 1: unbiased = k(0,1)·2/2 + k(0,2) − 2·mean cross
        let a = ndarray::array![[0.0], [1.0]];
        let b = ndarray::array![[0.0], [2.0]];
        let k = |d: f64| (-d * d / 2.0).exp();
        let expected = k(1.0) + k(2.0) - 2.0 * (k(0.0) + k(2.0) + k(1.0) + k(1.0)) / 4.0;
        let v = mmd2_rbf(a.view(), b.view(), Bandwidth::Fixed(1.0)).unwrap();
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let a = gaussian(10, 0.0, 1);
        let b = Array2::<f64>::zeros((10, 3));
        assert!(mmd2_rbf(a.view(), b.view(), Bandwidth::Median).is_err());
        assert!(mmd2_rbf(a.view(), a.view(), Bandwidth::Fixed(0.0)).is_err());
    }
}
