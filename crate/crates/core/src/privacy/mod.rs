//! Randomized response over projection vectors, the privacy ledger, and an
//! empirical auditor for the mechanism's likelihood-ratio bound.
//!
//! Given a center `i` and its neighbourhood of `k` vectors (center included),
//! the mechanism keeps `i` with probability `e^ε / (e^ε + k − 1)` and otherwise
//! switches to one of the other `k − 1` members uniformly. Any two outputs
//! therefore have likelihoods within a factor `e^ε`, and `δ = 0`.

mod audit;
mod ledger;
mod neighborhood;

pub use audit::{audit_ratio, audit_ratio_with, AuditReport, MIN_AUDIT_TRIALS};
pub use ledger::{ledger_report, PrivacyLedger};
pub use neighborhood::{cosine_distance, rr_perturb, topk_neighborhood, Neighborhood};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RrConfig {
    epsilon: f64,
    k: usize,
}

impl RrConfig {
    /// `epsilon` may be `0` (uniform response) or `+∞` (no perturbation).
    pub fn new(epsilon: f64, k: usize) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::Config(format!("epsilon must be ≥ 0, got {epsilon}")));
        }
        if k < 2 {
            return Err(Error::Config(format!("k must be ≥ 2, got {k}")));
        }
        Ok(RrConfig { epsilon, k })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Probability of returning the true vector, `e^ε / (e^ε + k − 1)`.
    pub fn keep_probability(&self) -> f64 {
        // Divided through by e^ε so large budgets do not overflow.
        1.0 / (1.0 + (self.k - 1) as f64 * (-self.epsilon).exp())
    }

    /// Probability of returning one particular other member, `1 / (e^ε + k − 1)`.
    pub fn switch_probability(&self) -> f64 {
        let t = (-self.epsilon).exp();
        t / (1.0 + (self.k - 1) as f64 * t)
    }
}

pub fn keep_probability(cfg: &RrConfig) -> f64 {
    cfg.keep_probability()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keep_probability_examples() {
        let p = RrConfig::new(2f64.ln(), 2).unwrap().keep_probability();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        let big = RrConfig::new(50.0, 7).unwrap().keep_probability();
        assert!((big - 1.0).abs() < 1e-12);
        assert_eq!(RrConfig::new(0.0, 4).unwrap().keep_probability(), 0.25);
        assert_eq!(RrConfig::new(f64::INFINITY, 3).unwrap().keep_probability(), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(RrConfig::new(1.0, 1).is_err());
        assert!(RrConfig::new(-0.1, 3).is_err());
        assert!(RrConfig::new(f64::NAN, 3).is_err());
    }

    #[test]
    fn keep_to_switch_ratio_is_exactly_e_to_epsilon() {
        for &(eps, k) in &[(0.5, 2), (1.0, 5), (3.0, 10)] {
            let c = RrConfig::new(eps, k).unwrap();
            let ratio = c.keep_probability() / c.switch_probability();
            assert!((ratio / f64::exp(eps) - 1.0).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn probabilities_normalize(eps in 0.0f64..60.0, k in 2usize..200) {
            let c = RrConfig::new(eps, k).unwrap();
            let total = c.keep_probability() + (k - 1) as f64 * c.switch_probability();
            prop_assert!((total - 1.0).abs() <= 4.0 * f64::EPSILON);
            prop_assert!(c.keep_probability() > 1.0 / k as f64 || eps == 0.0);
            prop_assert!(c.keep_probability() <= 1.0);
        }

        #[test]
        fn keep_probability_is_monotone(eps in 0.0f64..20.0, d in 0.01f64..2.0, k in 2usize..50) {
            let base = RrConfig::new(eps, k).unwrap().keep_probability();
            prop_assert!(RrConfig::new(eps + d, k).unwrap().keep_probability() > base);
            prop_assert!(RrConfig::new(eps, k + 1).unwrap().keep_probability() < base);
        }
    }
}
