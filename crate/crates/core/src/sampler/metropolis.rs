use rand::Rng;

use super::{HamiltonianState, ScoreFunction};
use crate::{Error, Result};

/// Supplies `ΔH = H(new) − H(old)` with `H = Q(u) + pᵀp/2`.
pub trait EnergyEstimator {
    fn delta_h(&self, old: &HamiltonianState, new: &HamiltonianState) -> Result<f64>;
}

/// Exact potential from an analytic target.
pub struct ExactPotential<'a, S: ?Sized>(pub &'a S);

impl<S: ScoreFunction + ?Sized> EnergyEstimator for ExactPotential<'_, S> {
    fn delta_h(&self, old: &HamiltonianState, new: &HamiltonianState) -> Result<f64> {
        let (Some(q_old), Some(q_new)) = (self.0.potential(&old.u), self.0.potential(&new.u)) else {
            return Err(Error::Config("target has no closed-form potential".into()));
        };
        Ok(q_new - q_old + new.kinetic_energy() - old.kinetic_energy())
    }
}

/// Potential difference recovered from the score alone.
pub struct PathPotential<'a, S: ?Sized> {
    pub score: &'a S,
    pub steps: usize,
}

impl<S: ScoreFunction + ?Sized> EnergyEstimator for PathPotential<'_, S> {
    fn delta_h(&self, old: &HamiltonianState, new: &HamiltonianState) -> Result<f64> {
        let dq = estimate_delta_potential_path(self.score, &old.u, &new.u, self.steps)?;
        Ok(dq + new.kinetic_energy() - old.kinetic_energy())
    }
}

/// `Q(u_new) − Q(u_old) = −∫ s · du` along the straight segment, midpoint rule.
pub fn estimate_delta_potential_path<S: ScoreFunction + ?Sized>(
    score_fn: &S,
    u_old: &[f64],
    u_new: &[f64],
    steps: usize,
) -> Result<f64> {
    if u_old.len() != u_new.len() {
        return Err(Error::DimensionMismatch {
            expected: u_old.len(),
            got: u_new.len(),
        });
    }
    if steps == 0 {
        return Err(Error::Config("path integral needs at least one step".into()));
    }
    let delta: Vec<f64> = u_new.iter().zip(u_old).map(|(b, a)| b - a).collect();
    let mut point = vec![0.0; u_old.len()];
    let mut work = 0.0;
    for i in 0..steps {
        let t = (i as f64 + 0.5) / steps as f64;
        for ((p, a), d) in point.iter_mut().zip(u_old).zip(&delta) {
            *p = a + t * d;
        }
        let s = score_fn.score(&point)?;
        work += s.iter().zip(&delta).map(|(s, d)| s * d).sum::<f64>();
    }
    Ok(-work / steps as f64)
}

/// Accepts with probability `min(1, exp(−ΔH))`. A failing estimator rejects
/// and bumps `warnings`.
pub fn metropolis_accept<E, R>(
    old: &HamiltonianState,
    new: &HamiltonianState,
    estimator: &E,
    rng: &mut R,
    warnings: &mut usize,
) -> bool
where
    E: EnergyEstimator + ?Sized,
    R: Rng + ?Sized,
{
    let dh = match estimator.delta_h(old, new) {
        Ok(dh) if !dh.is_nan() => dh,
        _ => {
            *warnings += 1;
            return false;
        }
    };
    if dh <= 0.0 {
        return true;
    }
    rng.random::<f64>() < (-dh).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    struct FixedDelta(f64);
    impl EnergyEstimator for FixedDelta {
        fn delta_h(&self, _: &HamiltonianState, _: &HamiltonianState) -> Result<f64> {
            Ok(self.0)
        }
    }

    struct Broken;
    impl EnergyEstimator for Broken {
        fn delta_h(&self, _: &HamiltonianState, _: &HamiltonianState) -> Result<f64> {
            Err(Error::NonFiniteScore)
        }
    }

    fn state() -> HamiltonianState {
        HamiltonianState::new(vec![0.0], vec![0.0]).unwrap()
    }

    #[test]
    fn non_positive_delta_always_accepts() {
        let mut rng = stream(0, Stream::Sampler);
        let mut warn = 0;
        for dh in [0.0, -1.0] {
            assert!((0..1000).all(|_| metropolis_accept(&state(), &state(), &FixedDelta(dh), &mut rng, &mut warn)));
        }
        assert_eq!(warn, 0);
    }

    #[test]
    fn acceptance_rate_for_unit_energy_increase() {
        // exact 1-D Gaussian energy: u 0 → √2 with p fixed at 0 gives ΔH = 1
        let target = |u: &[f64]| vec![-u[0]];
        struct Gauss<F>(F);
        impl<F: Fn(&[f64]) -> Vec<f64> + Sync> ScoreFunction for Gauss<F> {
            fn score(&self, u: &[f64]) -> Result<Vec<f64>> {
                Ok((self.0)(u))
            }
            fn potential(&self, u: &[f64]) -> Option<f64> {
                Some(0.5 * u[0] * u[0])
            }
        }
        let g = Gauss(target);
        let old = HamiltonianState::new(vec![0.0], vec![0.0]).unwrap();
        let new = HamiltonianState::new(vec![2f64.sqrt()], vec![0.0]).unwrap();
        let est = ExactPotential(&g);
        assert!((est.delta_h(&old, &new).unwrap() - 1.0).abs() < 1e-12);

        let mut rng = stream(11, Stream::Sampler);
        let mut warn = 0;
        let n = 100_000;
        let accepted = (0..n)
            .filter(|_| metropolis_accept(&old, &new, &est, &mut rng, &mut warn))
            .count();
        let p = (-1f64).exp();
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((accepted as f64 / n as f64 - p).abs() < 3.0 * sd);
    }

    #[test]
    fn estimator_failure_rejects_and_warns() {
        let mut rng = stream(0, Stream::Sampler);
        let mut warn = 0;
        assert!(!metropolis_accept(&state(), &state(), &Broken, &mut rng, &mut warn));
        assert_eq!(warn, 1);
    }

    #[test]
    fn path_integral_of_quadratic_potential() {
        let s = |u: &[f64]| u.iter().map(|x| -x).collect::<Vec<_>>();
        let dq = estimate_delta_potential_path(&s, &[0.0, 0.0], &[1.0, 0.0], 10).unwrap();
        assert!((dq - 0.5).abs() < 1e-12);
        let (a, b) = ([0.3, -1.2, 2.0], [-0.7, 0.4, 1.1]);
        let exact = 0.5 * (b.iter().map(|x| x * x).sum::<f64>() - a.iter().map(|x| x * x).sum::<f64>());
        let dq = estimate_delta_potential_path(&s, &a, &b, 10_000).unwrap();
        assert!((dq - exact).abs() < 1e-6);
        assert_eq!(estimate_delta_potential_path(&s, &a, &a, 5).unwrap(), 0.0);
    }

    #[test]
    fn path_integral_is_antisymmetric() {
        let s = |u: &[f64]| vec![-u[0].powi(3) + u[1].sin(), -u[1] * u[0].cos()];
        let (a, b) = ([0.2, 1.0], [-1.3, 0.6]);
        let fwd = estimate_delta_potential_path(&s, &a, &b, 64).unwrap();
        let rev = estimate_delta_potential_path(&s, &b, &a, 64).unwrap();
        assert!((fwd + rev).abs() < 1e-12);
    }
}
