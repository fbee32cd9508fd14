//! Analytic targets with known score and potential.

use super::ScoreFunction;
use crate::Result;

/// `N(0, I)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct StandardNormal;

impl ScoreFunction for StandardNormal {
    fn score(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(u.iter().map(|x| -x).collect())
    }

    fn potential(&self, u: &[f64]) -> Option<f64> {
        Some(0.5 * u.iter().map(|x| x * x).sum::<f64>())
    }
}

/// Equal mixture of `N(μ, I)` and `N(−μ, I)`.
#[derive(Clone, Debug)]
pub struct SymmetricMixture {
    pub mean: Vec<f64>,
}

impl SymmetricMixture {
    pub fn new(mean: Vec<f64>) -> Self {
        SymmetricMixture { mean }
    }

    /// Posterior weight of the `+μ` component, `σ(2 μᵀu)`.
    fn plus_weight(&self, u: &[f64]) -> f64 {
        let a: f64 = self.mean.iter().zip(u).map(|(m, x)| m * x).sum();
        crate::diffkit::sigmoid(2.0 * a)
    }
}

impl ScoreFunction for SymmetricMixture {
    fn score(&self, u: &[f64]) -> Result<Vec<f64>> {
        let w = self.plus_weight(u);
        // −u + μ (2w − 1)
        Ok(u.iter().zip(&self.mean).map(|(x, m)| -x + m * (2.0 * w - 1.0)).collect())
    }

    fn potential(&self, u: &[f64]) -> Option<f64> {
        // −log(½ e^{−|u−μ|²/2} + ½ e^{−|u+μ|²/2}) up to a constant
        let a: f64 = self.mean.iter().zip(u).map(|(m, x)| m * x).sum();
        let uu: f64 = u.iter().map(|x| x * x).sum();
        let log_cosh = a.abs() + (1.0 + (-2.0 * a.abs()).exp()).ln() - std::f64::consts::LN_2;
        Some(0.5 * uu - log_cosh)
    }
}
