//! Forward-mode dual numbers.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::{Error, Result};

/// A value paired with its directional derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualValue {
    pub primal: f64,
    pub tangent: f64,
}

impl DualValue {
    pub fn new(primal: f64, tangent: f64) -> Self {
        DualValue { primal, tangent }
    }

    pub fn constant(primal: f64) -> Self {
        DualValue {
            primal,
            tangent: 0.0,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.primal.exp();
        DualValue::new(e, e * self.tangent)
    }

    pub fn ln(self) -> Self {
        DualValue::new(self.primal.ln(), self.tangent / self.primal)
    }

    pub fn tanh(self) -> Self {
        let t = self.primal.tanh();
        DualValue::new(t, (1.0 - t * t) * self.tangent)
    }

    pub fn sigmoid(self) -> Self {
        let s = sigmoid(self.primal);
        DualValue::new(s, s * (1.0 - s) * self.tangent)
    }

    pub fn softplus(self) -> Self {
        DualValue::new(softplus(self.primal), sigmoid(self.primal) * self.tangent)
    }

    pub fn square(self) -> Self {
        self * self
    }
}

/// `ln(1 + e^x)` without overflow for large `x`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Add for DualValue {
    type Output = DualValue;
    fn add(self, rhs: DualValue) -> DualValue {
        DualValue::new(self.primal + rhs.primal, self.tangent + rhs.tangent)
    }
}

impl Sub for DualValue {
    type Output = DualValue;
    fn sub(self, rhs: DualValue) -> DualValue {
        DualValue::new(self.primal - rhs.primal, self.tangent - rhs.tangent)
    }
}

impl Mul for DualValue {
    type Output = DualValue;
    fn mul(self, rhs: DualValue) -> DualValue {
        DualValue::new(
            self.primal * rhs.primal,
            self.tangent * rhs.primal + self.primal * rhs.tangent,
        )
    }
}

impl Div for DualValue {
    type Output = DualValue;
    fn div(self, rhs: DualValue) -> DualValue {
        let q = self.primal / rhs.primal;
        DualValue::new(q, (self.tangent - q * rhs.tangent) / rhs.primal)
    }
}

impl Neg for DualValue {
    type Output = DualValue;
    fn neg(self) -> DualValue {
        DualValue::new(-self.primal, -self.tangent)
    }
}

impl Add<f64> for DualValue {
    type Output = DualValue;
    fn add(self, rhs: f64) -> DualValue {
        DualValue::new(self.primal + rhs, self.tangent)
    }
}

impl Mul<f64> for DualValue {
    type Output = DualValue;
    fn mul(self, rhs: f64) -> DualValue {
        DualValue::new(self.primal * rhs, self.tangent * rhs)
    }
}

pub fn dot(a: &[DualValue], b: &[DualValue]) -> DualValue {
    a.iter()
        .zip(b)
        .fold(DualValue::constant(0.0), |acc, (&x, &y)| acc + x * y)
}

/// `W x + b` for a constant row-major `W` of shape `b.len() × x.len()`.
pub fn affine(weights: &[f64], bias: &[f64], x: &[DualValue]) -> Vec<DualValue> {
    let cols = x.len();
    debug_assert_eq!(weights.len(), bias.len() * cols);
    bias.iter()
        .enumerate()
        .map(|(r, &b)| {
            let row = &weights[r * cols..(r + 1) * cols];
            let (mut p, mut t) = (b, 0.0);
            for (w, xi) in row.iter().zip(x) {
                p += w * xi.primal;
                t += w * xi.tangent;
            }
            DualValue::new(p, t)
        })
        .collect()
}

/// Jacobian-vector product by forward propagation: returns `(g(x), J_g(x) v)`.
pub fn jvp<G>(g: G, x: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>
where
    G: FnOnce(&[DualValue]) -> Vec<DualValue>,
{
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: v.len(),
        });
    }
    let seeded: Vec<DualValue> = x
        .iter()
        .zip(v)
        .map(|(&p, &t)| DualValue::new(p, t))
        .collect();
    let out = g(&seeded);
    Ok(out.iter().map(|d| (d.primal, d.tangent)).unzip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_carry_zero_tangent() {
        let c = DualValue::constant(3.0);
        assert_eq!(c.tangent, 0.0);
        assert_eq!((c * c).tangent, 0.0);
        assert_eq!(c.exp().tangent, 0.0);
    }

    #[test]
    fn chain_rule_for_nested_primitives() {
        // d/dx tanh(exp(x)) = (1 - tanh²(e^x)) e^x
        let x = 0.3;
        let d = DualValue::new(x, 1.0).exp().tanh();
        let expected = (1.0 - x.exp().tanh().powi(2)) * x.exp();
        assert!((d.tangent - expected).abs() < 1e-15);
    }

    #[test]
    fn negation_jvp() {
        let (_, dir) = jvp(|u| u.iter().map(|&x| -x).collect(), &[0.7, -1.2], &[1.0, 0.0]).unwrap();
        assert_eq!(dir, vec![-1.0, 0.0]);
    }

    #[test]
    fn matrix_jvp() {
        let w = [1.0, 2.0, 3.0, 4.0];
        let (_, dir) = jvp(|u| affine(&w, &[0.0, 0.0], u), &[0.1, 0.2], &[1.0, 1.0]).unwrap();
        assert_eq!(dir, vec![3.0, 7.0]);
    }

    #[test]
    fn nonlinear_jvp() {
        let (value, dir) = jvp(|u| vec![u[0] * u[0], u[1]], &[2.0, 5.0], &[1.0, 0.0]).unwrap();
        assert_eq!(value, vec![4.0, 5.0]);
        assert_eq!(dir, vec![4.0, 0.0]);
    }

    #[test]
    fn jvp_rejects_mismatched_direction() {
        let err = jvp(|u| u.to_vec(), &[1.0, 2.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
