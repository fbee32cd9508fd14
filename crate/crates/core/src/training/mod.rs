//! Mini-batch sliced score matching with randomized-response projections.
//!
//! Each iteration draws a batch uniformly with replacement, embeds labels,
//! samples one Gaussian projection per example, replaces it by the mechanism
//! output over its top-k cosine neighbourhood, and takes one optimizer step on
//! `mean[v_rᵀ J_s(u) v_r + ½ (vᵀ s(u))²]`. The perturbed vector enters only
//! the Jacobian term. The raw data score is never formed: the loss sees the
//! data only through `u`, and the privatized direction only through `v_r`.

mod loss;
mod optim;

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use loss::{loss_and_grad, ssm_rr_loss, ssm_rr_objective, ProjectionTriple};
pub use optim::{Optimizer, OptimizerState};

use crate::data::Dataset;
use crate::privacy::{rr_perturb, topk_neighborhood, PrivacyLedger, RrConfig};
use crate::rng::{self, Stream};
use crate::scoremodel::{embed, init_params, EmbeddingMatrix, MlpSpec, Params};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub rr: RrConfig,
    pub optimizer: Optimizer,
    pub seed: u64,
    /// When false, `v_r = v` and the mechanism is never invoked (plain
    /// sliced score matching, for comparison runs).
    pub privatize: bool,
    /// Checkpoint interval in iterations; 0 disables checkpoints.
    pub checkpoint_every: usize,
    /// Standard deviation of Gaussian jitter added to the embedded label
    /// coordinates of each batch. The label tail is otherwise a point mass
    /// per class, whose score is unbounded.
    pub embed_noise: f64,
}

impl TrainConfig {
    pub fn new(rr: RrConfig) -> Self {
        TrainConfig {
            batch_size: 64,
            iterations: 2000,
            learning_rate: 1e-4,
            rr,
            optimizer: Optimizer::default(),
            seed: 0,
            privatize: true,
            checkpoint_every: 0,
            embed_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < self.rr.k() {
            return Err(Error::Config(format!(
                "batch_size {} must be at least k = {}",
                self.batch_size,
                self.rr.k()
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.embed_noise >= 0.0 && self.embed_noise.is_finite()) {
            return Err(Error::Config(format!(
                "embed_noise must be nonnegative, got {}",
                self.embed_noise
            )));
        }
        self.optimizer.validate()
    }
}

/// `b` independent standard-normal rows of width `dim`.
pub fn sample_projections<R: Rng + ?Sized>(b: usize, dim: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((b, dim), || StandardNormal.sample(rng))
}

/// Runs the mechanism for every row of `v`.
pub fn perturb_projections<R: Rng + ?Sized>(
    v: &Array2<f64>,
    cfg: &RrConfig,
    rng: &mut R,
) -> Result<Vec<ProjectionTriple>> {
    (0..v.nrows())
        .map(|i| {
            let neighborhood = topk_neighborhood(i, v.view(), cfg.k())?;
            let chosen = rr_perturb(i, &neighborhood, cfg, rng);
            Ok(ProjectionTriple {
                v: v.row(i).to_vec(),
                v_r: v.row(chosen).to_vec(),
                neighborhood,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: Params,
    pub ledger: PrivacyLedger,
    pub loss_trace: Vec<f64>,
}

pub fn train(dataset: &Dataset, e: &EmbeddingMatrix, spec: &MlpSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_checkpoints(dataset, e, spec, cfg, |_, _| Ok(()))
}

/// [`train`], calling `on_checkpoint(iteration, params)` every
/// `cfg.checkpoint_every` iterations.
pub fn train_with_checkpoints<F>(
    dataset: &Dataset,
    e: &EmbeddingMatrix,
    spec: &MlpSpec,
    cfg: &TrainConfig,
    mut on_checkpoint: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &Params) -> Result<()>,
{
    cfg.validate()?;
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    if e.n_classes() < dataset.n_classes {
        return Err(Error::Config(format!(
            "embedding has {} classes, dataset has {}",
            e.n_classes(),
            dataset.n_classes
        )));
    }
    let dim = dataset.dim() + e.embed_dim();
    if spec.input_dim != dim {
        return Err(Error::Config(format!(
            "model input_dim {} does not match embedded width {dim}",
            spec.input_dim
        )));
    }

    let mut embedded = Array2::<f64>::zeros((dataset.len(), dim));
    for (i, mut row) in embedded.rows_mut().into_iter().enumerate() {
        let x = dataset.row(i).to_vec();
        let u = embed(&x, dataset.labels[i], e)?;
        row.assign(&ndarray::ArrayView1::from(u.as_slice()));
    }

    let mut params = init_params(spec)?;
    let mut flat = params.flat().to_vec();
    let mut opt = OptimizerState::new(cfg.optimizer, cfg.learning_rate, flat.len());
    // without the mechanism nothing bounds the leakage
    let budget = if cfg.privatize { cfg.rr.epsilon() } else { f64::INFINITY };
    let mut ledger = PrivacyLedger::new(budget);
    let mut batch_rng = rng::stream(cfg.seed, Stream::Batches);
    let mut proj_rng = rng::stream(cfg.seed, Stream::Projections);
    let mut mech_rng = rng::stream(cfg.seed, Stream::Mechanism);
    let mut jitter_rng = rng::stream(cfg.seed, Stream::Jitter);
    let feature_dim = dataset.dim();
    let mut loss_trace = Vec::with_capacity(cfg.iterations);

    for iteration in 1..=cfg.iterations {
        let idx: Vec<usize> = (0..cfg.batch_size)
            .map(|_| batch_rng.random_range(0..dataset.len()))
            .collect();
        let mut u = embedded.select(ndarray::Axis(0), &idx);
        if cfg.embed_noise > 0.0 {
            u.slice_mut(ndarray::s![.., feature_dim..]).mapv_inplace(|t| {
                let z: f64 = StandardNormal.sample(&mut jitter_rng);
                t + cfg.embed_noise * z
            });
        }
        let v = sample_projections(cfg.batch_size, dim, &mut proj_rng);
        let v_r = if cfg.privatize {
            let triples = perturb_projections(&v, &cfg.rr, &mut mech_rng)?;
            ledger.record_invocations(triples.len() as u64);
            let rows: Vec<f64> = triples.iter().flat_map(|t| t.v_r.iter().copied()).collect();
            Array2::from_shape_vec(v.dim(), rows).expect("batch shape")
        } else {
            v.clone()
        };

        let (loss, grad) = loss_and_grad(&params, &u, &v, &v_r).map_err(|err| {
            if err.is_numerical() {
                Error::TrainingDiverged { iteration }
            } else {
                err
            }
        })?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingDiverged { iteration });
        }
        loss_trace.push(loss);
        opt.apply(&mut flat, &grad);
        params = Params::from_flat(spec.clone(), flat.clone())
            .map_err(|_| Error::TrainingDiverged { iteration })?;
        if cfg.checkpoint_every > 0 && iteration % cfg.checkpoint_every == 0 {
            on_checkpoint(iteration, &params)?;
        }
    }

    Ok(TrainOutcome {
        params,
        ledger,
        loss_trace,
    })
}

/// `iteration,loss` rows, 1-indexed.
pub fn write_loss_csv(w: &mut impl Write, trace: &[f64]) -> Result<()> {
    writeln!(w, "iteration,loss")?;
    for (i, l) in trace.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, l)?;
    }
    Ok(())
}
