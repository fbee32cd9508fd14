//! Monte-Carlo check of the ε likelihood-ratio bound.
//!
//! A discrete instance of `k` candidate vectors is built so every center's
//! neighbourhood is the whole candidate set. For each center `i` the mechanism
//! is run `trials` times, giving `P̂[o | i]` for every output `o`. For every
//! output and every pair of centers the ratio `P̂[o | i] / P̂[o | j]` must not
//! exceed `e^ε` beyond sampling error: the pair fails only when the lower
//! 3σ Wilson bound of the numerator exceeds `e^ε` times the upper 3σ Wilson
//! bound of the denominator. Zero counts are therefore handled without
//! special cases.

use std::fmt;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::{rr_perturb, topk_neighborhood, Neighborhood, RrConfig};
use crate::rng::{self, DppmRng, Stream};
use crate::{Error, Result};

pub const MIN_AUDIT_TRIALS: usize = 10_000;

/// Normal quantile used for both one-sided bounds.
const Z: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub epsilon: f64,
    pub k: usize,
    pub trials: usize,
    /// Largest point-estimate ratio over pairs with a nonzero denominator.
    pub max_ratio: f64,
    /// `e^ε`.
    pub bound: f64,
    pub pass: bool,
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epsilon={} k={} trials={} max_ratio={:.6} bound={:.6} pass={}",
            self.epsilon, self.k, self.trials, self.max_ratio, self.bound, self.pass
        )
    }
}

fn wilson(count: usize, n: usize) -> (f64, f64) {
    let n = n as f64;
    let p = count as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Audits the randomized-response mechanism.
pub fn audit_ratio(cfg: &RrConfig, trials: usize, seed: u64) -> Result<AuditReport> {
    audit_ratio_with(cfg, trials, seed, |i, n, rng| rr_perturb(i, n, cfg, rng))
}

/// Audits an arbitrary mechanism `(center, neighbourhood, rng) → output index`
/// against the bound implied by `cfg.epsilon()`.
pub fn audit_ratio_with<M>(cfg: &RrConfig, trials: usize, seed: u64, mechanism: M) -> Result<AuditReport>
where
    M: Fn(usize, &Neighborhood, &mut DppmRng) -> usize,
{
    if trials < MIN_AUDIT_TRIALS {
        return Err(Error::Config(format!(
            "audit needs at least {MIN_AUDIT_TRIALS} trials, got {trials}"
        )));
    }
    let k = cfg.k();
    let mut rng = rng::stream(seed, Stream::Audit);
    let candidates = Array2::from_shape_fn((k, 4), |_| StandardNormal.sample(&mut rng));

    let mut counts = vec![vec![0usize; k]; k];
    for (i, row) in counts.iter_mut().enumerate() {
        let hood = topk_neighborhood(i, candidates.view(), k)?;
        let mut draws = rng::substream(seed, Stream::Audit, i as u64);
        for _ in 0..trials {
            let o = mechanism(i, &hood, &mut draws);
            row[o] += 1;
        }
    }

    let bound = cfg.epsilon().exp();
    let mut max_ratio: f64 = 0.0;
    let mut pass = true;
    for o in 0..k {
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let (num, den) = (counts[i][o], counts[j][o]);
                if den > 0 {
                    max_ratio = max_ratio.max(num as f64 / den as f64);
                } else if num > 0 {
                    max_ratio = f64::INFINITY;
                }
                let (num_lo, _) = wilson(num, trials);
                let (_, den_hi) = wilson(den, trials);
                if num_lo > bound * den_hi {
                    pass = false;
                }
            }
        }
    }
    Ok(AuditReport {
        epsilon: cfg.epsilon(),
        k,
        trials,
        max_ratio,
        bound,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_mechanism_passes() {
        let cfg = RrConfig::new(1.0, 5).unwrap();
        let r = audit_ratio(&cfg, 100_000, 3).unwrap();
        assert!(r.pass, "{r}");
        assert!((r.max_ratio / r.bound - 1.0).abs() < 0.1, "{r}");
    }

    #[test]
    fn zero_budget_ratios_are_near_one() {
        let cfg = RrConfig::new(0.0, 4).unwrap();
        let r = audit_ratio(&cfg, 100_000, 5).unwrap();
        assert!(r.pass);
        assert!(r.max_ratio < 1.05, "{r}");
    }

    #[test]
    fn always_keeping_is_caught() {
        let cfg = RrConfig::new(0.0, 5).unwrap();
        let r = audit_ratio_with(&cfg, 100_000, 1, |i, _, _| i).unwrap();
        assert!(!r.pass, "{r}");
    }

    #[test]
    fn too_few_trials_is_a_config_error() {
        let cfg = RrConfig::new(1.0, 2).unwrap();
        assert!(matches!(audit_ratio(&cfg, 100, 0), Err(Error::Config(_))));
    }

    #[test]
    fn report_line_format() {
        let r = AuditReport {
            epsilon: 1.0,
            k: 5,
            trials: 100_000,
            max_ratio: 2.5,
            bound: 1f64.exp(),
            pass: true,
        };
        assert_eq!(
            r.to_string(),
            "epsilon=1 k=5 trials=100000 max_ratio=2.500000 bound=2.718282 pass=true"
        );
    }
}
