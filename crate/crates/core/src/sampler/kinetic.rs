use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::{Error, Result};

/// Distribution of each momentum coordinate at refresh time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KineticSpec {
    Gaussian,
    Rayleigh { sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl KineticSpec {
    pub fn name(&self) -> &'static str {
        match self {
            KineticSpec::Gaussian => "gaussian",
            KineticSpec::Rayleigh { .. } => "rayleigh",
            KineticSpec::Uniform { .. } => "uniform",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KineticSpec::Gaussian => Ok(()),
            KineticSpec::Rayleigh { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            KineticSpec::Uniform { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => Ok(()),
            other => Err(Error::Config(format!("invalid kinetic distribution {other:?}"))),
        }
    }
}

/// `dim` i.i.d. momentum coordinates.
pub fn refresh_momentum<R: Rng + ?Sized>(dim: usize, kinetic: &KineticSpec, rng: &mut R) -> Vec<f64> {
    match *kinetic {
        KineticSpec::Gaussian => (0..dim).map(|_| StandardNormal.sample(rng)).collect(),
        KineticSpec::Rayleigh { sigma } => (0..dim)
            .map(|_| {
                // inverse CDF: σ sqrt(−2 ln(1 − U))
                let u: f64 = rng.random();
                sigma * (-2.0 * (1.0 - u).ln()).sqrt()
            })
            .collect(),
        KineticSpec::Uniform { lo, hi } => {
            let dist = Uniform::new_inclusive(lo, hi).expect("validated bounds");
            (0..dim).map(|_| dist.sample(rng)).collect()
        }
    }
}
