use ndarray::{ArrayView1, ArrayView2};
use rand::Rng;

use super::RrConfig;
use crate::{Error, Result};

/// The center and its `k − 1` nearest batch vectors by cosine distance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighborhood {
    pub center_index: usize,
    /// Center first, then the others by increasing distance (ties: smaller index).
    pub member_indices: Vec<usize>,
}

impl Neighborhood {
    pub fn k(&self) -> usize {
        self.member_indices.len()
    }
}

/// `1 − a·b / (‖a‖ ‖b‖)`.
pub fn cosine_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    1.0 - a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
}

/// Neighbourhood of row `i` in `batch` (one vector per row).
pub fn topk_neighborhood(i: usize, batch: ArrayView2<'_, f64>, k: usize) -> Result<Neighborhood> {
    let b = batch.nrows();
    if k < 2 {
        return Err(Error::Config(format!("k must be ≥ 2, got {k}")));
    }
    if b < k {
        return Err(Error::Config(format!("batch of {b} vectors is smaller than k = {k}")));
    }
    if i >= b {
        return Err(Error::DimensionMismatch { expected: b, got: i });
    }
    let norms: Vec<f64> = batch.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    if let Some(index) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::ZeroNorm { index });
    }
    let center = batch.row(i);
    let mut others: Vec<(f64, usize)> = (0..b)
        .filter(|&j| j != i)
        .map(|j| (1.0 - center.dot(&batch.row(j)) / (norms[i] * norms[j]), j))
        .collect();
    others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut member_indices = Vec::with_capacity(k);
    member_indices.push(i);
    member_indices.extend(others.iter().take(k - 1).map(|&(_, j)| j));
    Ok(Neighborhood {
        center_index: i,
        member_indices,
    })
}

/// One draw of the mechanism for center `i`: `i` itself with the keep
/// probability, otherwise a uniformly chosen other member.
pub fn rr_perturb<R: Rng + ?Sized>(
    i: usize,
    neighborhood: &Neighborhood,
    cfg: &RrConfig,
    rng: &mut R,
) -> usize {
    debug_assert_eq!(neighborhood.member_indices[0], i);
    debug_assert_eq!(neighborhood.k(), cfg.k());
    let r: f64 = rng.random();
    if r < cfg.keep_probability() {
        i
    } else {
        let j = rng.random_range(1..neighborhood.k());
        neighborhood.member_indices[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use ndarray::array;

    #[test]
    fn nearest_by_cosine() {
        let batch = array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let n = topk_neighborhood(0, batch.view(), 2).unwrap();
        assert_eq!(n.member_indices, vec![0, 1]);
        let all = topk_neighborhood(2, batch.view(), 3).unwrap();
        assert_eq!(all.member_indices, vec![2, 1, 0]);
    }

    #[test]
    fn duplicates_tie_toward_smaller_index() {
        let batch = array![[0.0, 1.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0], [1.0, 1.0]];
        let n = topk_neighborhood(2, batch.view(), 3).unwrap();
        assert_eq!(n.member_indices, vec![2, 1, 3]);
    }

    #[test]
    fn rejects_zero_vectors_and_small_batches() {
        let batch = array![[1.0, 0.0], [0.0, 0.0], [1.0, 1.0]];
        assert!(matches!(
            topk_neighborhood(0, batch.view(), 2),
            Err(Error::ZeroNorm { index: 1 })
        ));
        let small = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(topk_neighborhood(0, small.view(), 3).is_err());
    }

    #[test]
    fn huge_budget_always_keeps() {
        let batch = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let n = topk_neighborhood(1, batch.view(), 3).unwrap();
        let cfg = RrConfig::new(1e6, 3).unwrap();
        let mut rng = stream(0, Stream::Mechanism);
        assert!((0..1000).all(|_| rr_perturb(1, &n, &cfg, &mut rng) == 1));
    }

    #[test]
    fn keep_rate_matches_formula() {
        let batch = array![[1.0, 0.0], [0.0, 1.0]];
        let n = topk_neighborhood(0, batch.view(), 2).unwrap();
        let cfg = RrConfig::new(2f64.ln(), 2).unwrap();
        let mut rng = stream(1, Stream::Mechanism);
        let trials = 100_000;
        let kept = (0..trials).filter(|_| rr_perturb(0, &n, &cfg, &mut rng) == 0).count();
        let p = 2.0 / 3.0;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((kept as f64 / trials as f64 - p).abs() < 3.0 * sd);
    }

    #[test]
    fn zero_budget_is_uniform_over_members() {
        let batch = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let n = topk_neighborhood(0, batch.view(), 3).unwrap();
        let cfg = RrConfig::new(0.0, 3).unwrap();
        let mut rng = stream(2, Stream::Mechanism);
        let trials = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            counts[rr_perturb(0, &n, &cfg, &mut rng)] += 1;
        }
        let p = 1.0 / 3.0;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        for c in counts {
            assert!((c as f64 / trials as f64 - p).abs() < 3.0 * sd, "{counts:?}");
        }
    }
}
