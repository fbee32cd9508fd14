use super::ScoreFunction;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianState {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    /// Current outer iteration (1-indexed; 0 before the first).
    pub m: usize,
    /// Leapfrog steps taken so far.
    pub steps: usize,
}

impl HamiltonianState {
    pub fn new(u: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if u.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: p.len(),
            });
        }
        Ok(HamiltonianState { u, p, m: 0, steps: 0 })
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.p.iter().map(|x| x * x).sum::<f64>()
    }

    pub fn with_negated_momentum(&self) -> Self {
        HamiltonianState {
            p: self.p.iter().map(|x| -x).collect(),
            ..self.clone()
        }
    }

    fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.p).all(|x| x.is_finite())
    }
}

/// One full step: half kick along the score, full drift, half kick.
pub fn leapfrog<S: ScoreFunction + ?Sized>(
    state: &HamiltonianState,
    score_fn: &S,
    lambda: f64,
) -> Result<HamiltonianState> {
    let start = score_fn.score(&state.u);
    leapfrog_from(state, start, score_fn, lambda).map(|(next, _)| next)
}

/// Leapfrog step given the score at the starting position; also returns the
/// score at the end position so consecutive steps share evaluations.
pub(crate) fn leapfrog_from<S: ScoreFunction + ?Sized>(
    state: &HamiltonianState,
    start_score: Result<Vec<f64>>,
    score_fn: &S,
    lambda: f64,
) -> Result<(HamiltonianState, Vec<f64>)> {
    let step = state.steps + 1;
    let diverged = |_| Error::NonFiniteState { step };
    let s0 = start_score.map_err(diverged)?;
    let half = 0.5 * lambda;
    let p_half: Vec<f64> = state.p.iter().zip(&s0).map(|(p, s)| p + half * s).collect();
    let u: Vec<f64> = state.u.iter().zip(&p_half).map(|(u, p)| u + lambda * p).collect();
    let s1 = score_fn.score(&u).map_err(diverged)?;
    let p: Vec<f64> = p_half.iter().zip(&s1).map(|(p, s)| p + half * s).collect();
    let next = HamiltonianState {
        u,
        p,
        m: state.m,
        steps: step,
    };
    if !next.is_finite() || s1.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteState { step });
    }
    Ok((next, s1))
}
