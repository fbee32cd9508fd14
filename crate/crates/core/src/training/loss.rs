use ndarray::Array2;

use crate::diffkit::{self, tape_jvp, Tape, Var};
use crate::privacy::Neighborhood;
use crate::scoremodel::{score_jvp, tape_score, MlpSpec, Params};
use crate::{Error, Result};

/// One example's projection `v`, the mechanism output `v_r`, and the
/// neighbourhood `v_r` was drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionTriple {
    pub v: Vec<f64>,
    pub v_r: Vec<f64>,
    pub neighborhood: Neighborhood,
}

/// Batch mean of `v_rᵀ J_s(u) v_r + ½ (vᵀ s(u))²`, evaluated directly
/// (no tape) from the triples and the batch rows alone.
pub fn ssm_rr_loss(params: &Params, u_batch: &Array2<f64>, triples: &[ProjectionTriple]) -> Result<f64> {
    if u_batch.nrows() != triples.len() {
        return Err(Error::DimensionMismatch {
            expected: u_batch.nrows(),
            got: triples.len(),
        });
    }
    let mut total = 0.0;
    for (index, (u, t)) in u_batch.rows().into_iter().zip(triples).enumerate() {
        let u = u.to_vec();
        if t.v.len() != u.len() || t.v_r.len() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: t.v.len().max(t.v_r.len()),
            });
        }
        let (_, j_vr) = score_jvp(params, &u, &t.v_r).map_err(|_| Error::NonFiniteBatchLoss { index })?;
        let (s, _) = score_jvp(params, &u, &t.v).map_err(|_| Error::NonFiniteBatchLoss { index })?;
        let hessian_term: f64 = t.v_r.iter().zip(&j_vr).map(|(a, b)| a * b).sum();
        let projected: f64 = t.v.iter().zip(&s).map(|(a, b)| a * b).sum();
        let term = hessian_term + 0.5 * projected * projected;
        if !term.is_finite() {
            return Err(Error::NonFiniteBatchLoss { index });
        }
        total += term;
    }
    Ok(total / triples.len() as f64)
}

/// The same objective on a tape, for batches stored row-wise.
pub fn ssm_rr_objective<'t>(
    spec: &MlpSpec,
    theta: Var<'t>,
    u: Var<'t>,
    v: Var<'t>,
    v_r: Var<'t>,
) -> Var<'t> {
    let (s, j_vr) = tape_jvp(|d| tape_score(spec, theta, d), u, v_r);
    let hessian_term = v_r.row_dot(j_vr);
    let projected = v.row_dot(s).square().scale(0.5);
    (hessian_term + projected).mean()
}

/// `(loss, ∂loss/∂θ)` by reverse-over-forward differentiation.
pub fn loss_and_grad(
    params: &Params,
    u: &Array2<f64>,
    v: &Array2<f64>,
    v_r: &Array2<f64>,
) -> Result<(f64, Vec<f64>)> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let spec = params.spec();
    diffkit::grad_through_jvp(
        |tape: &Tape, theta, u, v_r| {
            let v = tape.leaf(v.clone());
            ssm_rr_objective(spec, theta, u, v, v_r)
        },
        params.flat(),
        u,
        v_r,
    )
}
