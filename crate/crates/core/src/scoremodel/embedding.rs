use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Fixed `n_classes × embed_dim` label embedding.
///
/// Rows are drawn from a seeded Gaussian and rescaled to a common norm of
/// `sqrt(embed_dim)`. Equal norms make max-inner-product decoding coincide
/// with nearest-row decoding, so every row decodes to itself.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: Array2<f64>,
    seed: u64,
}

/// `u = concat(x, e_y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedSample {
    pub u: Vec<f64>,
    pub feature_dim: usize,
    pub embed_dim: usize,
}

impl EmbeddedSample {
    pub fn from_vec(u: Vec<f64>, feature_dim: usize, embed_dim: usize) -> Result<Self> {
        if u.len() != feature_dim + embed_dim {
            return Err(Error::DimensionMismatch {
                expected: feature_dim + embed_dim,
                got: u.len(),
            });
        }
        Ok(EmbeddedSample {
            u,
            feature_dim,
            embed_dim,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.u
    }

    pub fn features(&self) -> &[f64] {
        &self.u[..self.feature_dim]
    }

    pub fn tail(&self) -> &[f64] {
        &self.u[self.feature_dim..]
    }
}

impl EmbeddingMatrix {
    pub fn seeded(n_classes: usize, embed_dim: usize, seed: u64) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::Config("need at least one class".into()));
        }
        if n_classes > 1 && embed_dim == 0 {
            return Err(Error::Config(
                "embed_dim must be positive with more than one class".into(),
            ));
        }
        let mut rng = rng::stream(seed, Stream::Embedding);
        let mut rows = Array2::<f64>::zeros((n_classes, embed_dim));
        let target = (embed_dim as f64).sqrt();
        for mut row in rows.rows_mut().into_iter().filter(|_| embed_dim > 0) {
            loop {
                row.iter_mut()
                    .for_each(|x| *x = StandardNormal.sample(&mut rng));
                let norm = row.dot(&row).sqrt();
                if norm > 1e-8 {
                    row.mapv_inplace(|x| x * target / norm);
                    break;
                }
            }
        }
        Self::checked(rows, seed)
    }

    pub fn identity(n: usize) -> Self {
        Self::checked(Array2::eye(n), 0).expect("identity rows are distinct")
    }

    /// Uses `rows` as given after checking they are pairwise distinct and
    /// self-decoding.
    pub fn from_rows(rows: Array2<f64>) -> Result<Self> {
        Self::checked(rows, 0)
    }

    fn checked(rows: Array2<f64>, seed: u64) -> Result<Self> {
        let e = EmbeddingMatrix { rows, seed };
        for i in 0..e.n_classes() {
            for j in 0..i {
                if e.rows.row(i) == e.rows.row(j) {
                    return Err(Error::Config(format!("embedding rows {j} and {i} coincide")));
                }
            }
            if e.n_classes() > 1 && e.decode(e.rows.row(i).as_slice().unwrap()) != i {
                return Err(Error::Config(format!(
                    "embedding row {i} does not decode to itself"
                )));
            }
        }
        Ok(e)
    }

    pub fn n_classes(&self) -> usize {
        self.rows.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    /// Smallest Euclidean distance between two distinct rows.
    pub fn min_row_gap(&self) -> f64 {
        let n = self.n_classes();
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in 0..i {
                let d = &self.rows.row(i) - &self.rows.row(j);
                gap = gap.min(d.dot(&d).sqrt());
            }
        }
        gap
    }

    /// Class whose row has the largest inner product with `tail`; ties go to
    /// the smaller index.
    pub fn decode(&self, tail: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (c, row) in self.rows.rows().into_iter().enumerate() {
            let score: f64 = row.iter().zip(tail).map(|(a, b)| a * b).sum();
            if score > best.1 {
                best = (c, score);
            }
        }
        best.0
    }
}

pub fn embed(x: &[f64], y: usize, e: &EmbeddingMatrix) -> Result<EmbeddedSample> {
    if y >= e.n_classes() {
        return Err(Error::LabelOutOfRange {
            label: y,
            n_classes: e.n_classes(),
        });
    }
    let mut u = Vec::with_capacity(x.len() + e.embed_dim());
    u.extend_from_slice(x);
    u.extend(e.rows.row(y).iter());
    Ok(EmbeddedSample {
        u,
        feature_dim: x.len(),
        embed_dim: e.embed_dim(),
    })
}

pub fn unembed(u: &EmbeddedSample, e: &EmbeddingMatrix) -> (Vec<f64>, usize) {
    (u.features().to_vec(), e.decode(u.tail()))
}
