use rand::Rng;
use rayon::prelude::*;

use super::leapfrog::leapfrog_from;
use super::metropolis::{metropolis_accept, EnergyEstimator, ExactPotential, PathPotential};
use super::{refresh_momentum, step_size, HamiltonianState, MetropolisMode, SamplerConfig, ScoreFunction};
use crate::rng::{substream, Stream};
use crate::scoremodel::{EmbeddedSample, EmbeddingMatrix, Params};
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainStats {
    pub proposals: usize,
    pub accepted: usize,
    /// Metropolis tests that could not estimate `ΔH` and rejected.
    pub warnings: usize,
    pub leapfrog_steps: usize,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    fn merge(&mut self, other: &ChainStats) {
        self.proposals += other.proposals;
        self.accepted += other.accepted;
        self.warnings += other.warnings;
        self.leapfrog_steps += other.leapfrog_steps;
    }
}

#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub final_u: Vec<f64>,
    /// Positions recorded every `thin` steps of the last outer iteration.
    pub trajectory: Vec<Vec<f64>>,
    pub stats: ChainStats,
}

/// Runs one chain of `M` outer iterations from a uniform start.
pub fn run_chain<S, R>(score_fn: &S, cfg: &SamplerConfig, dim: usize, rng: &mut R) -> Result<ChainOutput>
where
    S: ScoreFunction + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let (lo, hi) = cfg.init_range;
    let mut u: Vec<f64> = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
    let mut stats = ChainStats::default();
    let mut trajectory = Vec::new();

    for m in 1..=cfg.outer_iters {
        let lambda = step_size(m, cfg)?;
        let p = refresh_momentum(dim, &cfg.kinetic, rng);
        let start = HamiltonianState { u, p, m, steps: 0 };
        let diverged = |err: Error| match err {
            Error::NonFiniteState { step } => Error::SamplerDiverged { outer: m, step },
            other => other,
        };

        let mut state = start.clone();
        let mut s = score_fn
            .score(&state.u)
            .map_err(|_| Error::SamplerDiverged { outer: m, step: 0 })?;
        for n in 1..=cfg.leapfrog_steps {
            let (next, s_next) = leapfrog_from(&state, Ok(s), score_fn, lambda).map_err(diverged)?;
            state = next;
            s = s_next;
            if m == cfg.outer_iters {
                if let Some(thin) = cfg.thin {
                    if n % thin == 0 {
                        trajectory.push(state.u.clone());
                    }
                }
            }
        }
        stats.leapfrog_steps += cfg.leapfrog_steps;

        let accept = match cfg.metropolis {
            MetropolisMode::Off => true,
            MetropolisMode::ExactEnergy => {
                metropolis_accept(&start, &state, &ExactPotential(score_fn), rng, &mut stats.warnings)
            }
            MetropolisMode::PathIntegral { steps } => {
                let est = PathPotential { score: score_fn, steps };
                metropolis_accept(&start, &state, &est as &dyn EnergyEstimator, rng, &mut stats.warnings)
            }
        };
        if cfg.metropolis != MetropolisMode::Off {
            stats.proposals += 1;
            if accept {
                stats.accepted += 1;
            }
        }
        u = if accept { state.u } else { start.u };
    }

    Ok(ChainOutput {
        final_u: u,
        trajectory,
        stats,
    })
}

/// `n` independent chains in parallel, chain `i` on its own substream of
/// `cfg.seed`. Results are in chain order regardless of scheduling.
pub fn run_chains<S>(score_fn: &S, cfg: &SamplerConfig, dim: usize, n: usize) -> Result<Vec<ChainOutput>>
where
    S: ScoreFunction + ?Sized,
{
    cfg.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, Stream::Sampler, i as u64);
            run_chain(score_fn, cfg, dim, &mut rng)
        })
        .collect()
}

/// Draws `n` embedded samples from a trained score model.
pub fn generate_samples(
    params: &Params,
    e: &EmbeddingMatrix,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<(Vec<EmbeddedSample>, ChainStats)> {
    let dim = params.spec().input_dim;
    if dim < e.embed_dim() {
        return Err(Error::DimensionMismatch {
            expected: e.embed_dim(),
            got: dim,
        });
    }
    let feature_dim = dim - e.embed_dim();
    let chains = run_chains(params, cfg, dim, n)?;
    let mut stats = ChainStats::default();
    let mut samples = Vec::with_capacity(n);
    for c in chains {
        stats.merge(&c.stats);
        samples.push(EmbeddedSample::from_vec(c.final_u, feature_dim, e.embed_dim())?);
    }
    Ok((samples, stats))
}
