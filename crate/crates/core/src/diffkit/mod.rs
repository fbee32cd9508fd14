//! Automatic differentiation for the score-matching objective.
//!
//! Forward mode ([`DualValue`], [`DualVar`]) carries a directional derivative
//! alongside each value; reverse mode ([`Tape`]) records primitives and sweeps
//! adjoints backwards. The second-order loss term `vᵀ J_s(u) v` is obtained by
//! running the forward-mode propagation *on the tape* (both the value and the
//! tangent are tape nodes), then sweeping once in reverse with respect to the
//! parameters. No Hessian is ever materialized.
//!
//! Only the primitives exposed by [`Var`] and [`DualValue`] exist, so a
//! function built from anything else does not compile.

mod check;
mod dual;
mod forward;
mod tape;

pub use check::{central_gradient, fd_directional, finite_diff_check};
pub use dual::{affine, dot, jvp, sigmoid, softplus, DualValue};
pub use forward::{tape_jvp, DualVar};
pub use tape::{Gradients, Op, Tape, Var};

use ndarray::Array2;

use crate::{Error, Result};

/// Evaluates `f` at `x` and returns `(f(x), ∇f(x))`.
///
/// `f` receives `x` as a `1 × n` row and must return a `1×1` node.
pub fn value_and_grad<F>(f: F, x: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Var<'t>,
{
    let tape = Tape::new();
    let input = tape.row(x);
    let out = f(&tape, input);
    let value = out.scalar_value();
    let grads = tape.gradient(out)?;
    Ok((value, grads.wrt(input).into_iter().collect()))
}

pub fn grad<F>(f: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: for<'t> Fn(&'t Tape, Var<'t>) -> Var<'t>,
{
    value_and_grad(f, x).map(|(_, g)| g)
}

/// Gradient with respect to `params` of a loss that internally differentiates
/// forward along `v` (typically via [`tape_jvp`]).
///
/// The closure receives `params` as a `1 × P` row, and `x`, `v` as constant
/// leaves. Returns `(loss, ∂loss/∂params)`.
pub fn grad_through_jvp<F>(
    loss: F,
    params: &[f64],
    x: &Array2<f64>,
    v: &Array2<f64>,
) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> Fn(&'t Tape, Var<'t>, Var<'t>, Var<'t>) -> Var<'t>,
{
    if x.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: v.len(),
        });
    }
    let tape = Tape::new();
    let theta = tape.row(params);
    let xs = tape.leaf(x.clone());
    let vs = tape.leaf(v.clone());
    let out = loss(&tape, theta, xs, vs);
    let value = out.scalar_value();
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let grads = tape.gradient(out)?;
    Ok((value, grads.wrt(theta).into_iter().collect()))
}
