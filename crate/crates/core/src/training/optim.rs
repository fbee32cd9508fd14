use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps_hat: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }
}

impl Optimizer {
    pub fn validate(&self) -> Result<()> {
        if let Optimizer::Adam { beta1, beta2, eps_hat } = *self {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps_hat <= 0.0 {
                return Err(Error::Config(format!(
                    "adam needs 0 ≤ β < 1 and ε̂ > 0, got ({beta1}, {beta2}, {eps_hat})"
                )));
            }
        }
        Ok(())
    }
}

/// Per-run optimizer state; descends the gradient.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    kind: Optimizer,
    learning_rate: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(kind: Optimizer, learning_rate: f64, n_params: usize) -> Self {
        let moments = match kind {
            Optimizer::Sgd => 0,
            Optimizer::Adam { .. } => n_params,
        };
        OptimizerState {
            kind,
            learning_rate,
            step: 0,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
        }
    }

    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        self.step += 1;
        match self.kind {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.learning_rate * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps_hat } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + eps_hat);
                }
            }
        }
    }
}
