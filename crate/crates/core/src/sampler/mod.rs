//! Hamiltonian sampling from a learned score.
//!
//! Each outer iteration `m = 1..=M` refreshes the momentum, sets the step to
//! `λ₀ (M/m)²`, runs `N` leapfrog steps, and optionally applies a Metropolis
//! test on the joint `(u, p)` state. The leapfrog kicks the momentum *along*
//! the score (`p ← p + ½λ s(u)`) and drifts the position by `λ p`, which is
//! the integrator that leaves `exp(−Q(u) − pᵀp/2)` invariant when
//! `s = −∇Q = ∇ log p`. The kinetic gradient is taken as `p` for every
//! momentum distribution; any scale factor is absorbed into `λ`.

mod chain;
mod kinetic;
mod leapfrog;
mod metropolis;
pub mod targets;

pub use chain::{generate_samples, run_chain, run_chains, ChainOutput, ChainStats};
pub use kinetic::{refresh_momentum, KineticSpec};
pub use leapfrog::{leapfrog, HamiltonianState};
pub use metropolis::{
    estimate_delta_potential_path, metropolis_accept, EnergyEstimator, ExactPotential, PathPotential,
};

use crate::scoremodel::{score, Params};
use crate::{Error, Result};

/// Anything that can supply `∇_u log p(u)`.
pub trait ScoreFunction: Sync {
    fn score(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// Potential `Q(u) = −log p(u) + const`, when known in closed form.
    fn potential(&self, _u: &[f64]) -> Option<f64> {
        None
    }
}

impl ScoreFunction for Params {
    fn score(&self, u: &[f64]) -> Result<Vec<f64>> {
        score(self, u)
    }
}

impl<F> ScoreFunction for F
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn score(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self(u))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetropolisMode {
    Off,
    /// Uses [`ScoreFunction::potential`]; only analytic targets provide it.
    ExactEnergy,
    /// Estimates `ΔQ` by integrating the score along the straight segment.
    PathIntegral { steps: usize },
}

impl MetropolisMode {
    pub fn name(&self) -> &'static str {
        match self {
            MetropolisMode::Off => "off",
            MetropolisMode::ExactEnergy => "exact_energy",
            MetropolisMode::PathIntegral { .. } => "path_integral",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Base step `λ₀`, reached at the last outer iteration.
    pub lambda0: f64,
    /// Outer iterations `M`.
    pub outer_iters: usize,
    /// Leapfrog steps per outer iteration `N`.
    pub leapfrog_steps: usize,
    pub kinetic: KineticSpec,
    pub metropolis: MetropolisMode,
    /// Initial positions are i.i.d. uniform on this interval.
    pub init_range: (f64, f64),
    /// Caps the schedule multiplier `(M/m)²`; `None` keeps the plain schedule.
    pub max_multiplier: Option<f64>,
    /// Record every `thin`-th position during the last outer iteration.
    pub thin: Option<usize>,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(lambda0: f64, outer_iters: usize, leapfrog_steps: usize) -> Self {
        SamplerConfig {
            lambda0,
            outer_iters,
            leapfrog_steps,
            kinetic: KineticSpec::Gaussian,
            metropolis: MetropolisMode::Off,
            init_range: (-1.0, 1.0),
            max_multiplier: None,
            thin: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::Config(format!("lambda0 must be positive, got {}", self.lambda0)));
        }
        if self.outer_iters == 0 || self.leapfrog_steps == 0 {
            return Err(Error::Config("outer_iters and leapfrog_steps must be ≥ 1".into()));
        }
        if !(self.init_range.0 < self.init_range.1) {
            return Err(Error::Config(format!("empty init range {:?}", self.init_range)));
        }
        if let Some(m) = self.max_multiplier {
            if !(m >= 1.0) {
                return Err(Error::Config(format!("max_multiplier must be ≥ 1, got {m}")));
            }
        }
        if self.thin == Some(0) {
            return Err(Error::Config("thin must be ≥ 1".into()));
        }
        if let MetropolisMode::PathIntegral { steps: 0 } = self.metropolis {
            return Err(Error::Config("path integral needs at least one step".into()));
        }
        self.kinetic.validate()
    }
}

/// `λ₀ (M/m)²` for the 1-indexed outer iteration `m`, optionally capped.
pub fn step_size(m: usize, cfg: &SamplerConfig) -> Result<f64> {
    if m == 0 || m > cfg.outer_iters {
        return Err(Error::Config(format!(
            "outer iteration {m} outside 1..={}",
            cfg.outer_iters
        )));
    }
    let ratio = cfg.outer_iters as f64 / m as f64;
    let mut multiplier = ratio * ratio;
    if let Some(cap) = cfg.max_multiplier {
        multiplier = multiplier.min(cap);
    }
    Ok(cfg.lambda0 * multiplier)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let cfg = SamplerConfig::new(0.01, 10, 1);
        assert_eq!(step_size(10, &cfg).unwrap(), 0.01);
        assert!((step_size(5, &cfg).unwrap() - 0.04).abs() < 1e-15);
        let long_run = SamplerConfig::new(1e-5, 1000, 1);
        assert!((step_size(1, &long_run).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn schedule_is_strictly_decreasing_and_one_indexed() {
        let cfg = SamplerConfig::new(0.003, 40, 1);
        let steps: Vec<f64> = (1..=40).map(|m| step_size(m, &cfg).unwrap()).collect();
        assert!(steps.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(*steps.last().unwrap(), 0.003);
        assert!(step_size(0, &cfg).is_err());
        assert!(step_size(41, &cfg).is_err());
    }

    #[test]
    fn capped_schedule() {
        let mut cfg = SamplerConfig::new(0.01, 100, 1);
        cfg.max_multiplier = Some(25.0);
        assert!((step_size(1, &cfg).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(step_size(100, &cfg).unwrap(), 0.01);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(0.0, 1, 1).validate().is_err());
        assert!(SamplerConfig::new(0.1, 0, 1).validate().is_err());
        assert!(SamplerConfig::new(0.1, 1, 0).validate().is_err());
        assert!(SamplerConfig::new(0.1, 1, 1).validate().is_ok());
    }
}
