//! Forward-mode propagation whose primal and tangent both live on a tape.

use std::ops::{Add, Mul, Neg, Sub};

use super::tape::Var;

/// A tape value and its directional derivative, itself a tape value.
///
/// Weights passed to [`DualVar::matmul_t`] and friends are treated as
/// constant along the direction, which is what a Jacobian with respect to
/// the network input requires. They stay differentiable in reverse mode.
#[derive(Clone, Copy, Debug)]
pub struct DualVar<'t> {
    pub primal: Var<'t>,
    pub tangent: Var<'t>,
}

impl<'t> DualVar<'t> {
    pub fn new(primal: Var<'t>, tangent: Var<'t>) -> Self {
        DualVar { primal, tangent }
    }

    pub fn matmul_t(self, w: Var<'t>) -> Self {
        DualVar::new(self.primal.matmul_t(w), self.tangent.matmul_t(w))
    }

    pub fn add_row(self, b: Var<'t>) -> Self {
        DualVar::new(self.primal.add_row(b), self.tangent)
    }

    pub fn affine(self, w: Var<'t>, b: Var<'t>) -> Self {
        self.matmul_t(w).add_row(b)
    }

    pub fn tanh(self) -> Self {
        let y = self.primal.tanh();
        let local = (-y.square()).offset(1.0);
        DualVar::new(y, self.tangent * local)
    }

    pub fn softplus(self) -> Self {
        DualVar::new(self.primal.softplus(), self.tangent * self.primal.sigmoid())
    }

    pub fn sigmoid(self) -> Self {
        let s = self.primal.sigmoid();
        let local = s * (-s).offset(1.0);
        DualVar::new(s, self.tangent * local)
    }

    pub fn exp(self) -> Self {
        let e = self.primal.exp();
        DualVar::new(e, self.tangent * e)
    }

    pub fn ln(self) -> Self {
        DualVar::new(self.primal.ln(), self.tangent / self.primal)
    }

    pub fn square(self) -> Self {
        DualVar::new(
            self.primal.square(),
            (self.tangent * self.primal).scale(2.0),
        )
    }

    pub fn scale(self, c: f64) -> Self {
        DualVar::new(self.primal.scale(c), self.tangent.scale(c))
    }
}

impl<'t> Add for DualVar<'t> {
    type Output = DualVar<'t>;
    fn add(self, rhs: Self) -> Self {
        DualVar::new(self.primal + rhs.primal, self.tangent + rhs.tangent)
    }
}

impl<'t> Sub for DualVar<'t> {
    type Output = DualVar<'t>;
    fn sub(self, rhs: Self) -> Self {
        DualVar::new(self.primal - rhs.primal, self.tangent - rhs.tangent)
    }
}

impl<'t> Mul for DualVar<'t> {
    type Output = DualVar<'t>;
    fn mul(self, rhs: Self) -> Self {
        DualVar::new(
            self.primal * rhs.primal,
            self.tangent * rhs.primal + self.primal * rhs.tangent,
        )
    }
}

impl<'t> Neg for DualVar<'t> {
    type Output = DualVar<'t>;
    fn neg(self) -> Self {
        DualVar::new(-self.primal, -self.tangent)
    }
}

/// Runs `g` forward from `x` along `v`; returns `(g(x), J_g(x) v)` as tape nodes.
pub fn tape_jvp<'t, G>(g: G, x: Var<'t>, v: Var<'t>) -> (Var<'t>, Var<'t>)
where
    G: FnOnce(DualVar<'t>) -> DualVar<'t>,
{
    assert_eq!(x.dim(), v.dim(), "direction must match the input shape");
    let out = g(DualVar::new(x, v));
    (out.primal, out.tangent)
}
