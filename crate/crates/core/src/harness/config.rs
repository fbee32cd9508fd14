//! Flat `key = value` run configuration.
//!
//! Precedence is command line over file over defaults. Every key has a
//! default, so the canonical rendering (all keys, sorted) identifies a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::classifier::ClassifierConfig;
use super::datasets::DatasetSpec;
use crate::privacy::RrConfig;
use crate::sampler::{KineticSpec, MetropolisMode, SamplerConfig};
use crate::scoremodel::{Activation, MlpSpec};
use crate::training::{Optimizer, TrainConfig};
use crate::{Error, Result};

/// `(key, default, description)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "0", "master seed for every random stream"),
    ("data.spec", "mixture2(6)", "toy generator: gauss2d, mixture2(sep), rings, grid_digits"),
    ("data.path", "", "CSV dataset; overrides data.spec when set"),
    ("data.n", "3000", "examples to generate"),
    ("data.test_fraction", "0.3", "held-out real split for evaluation"),
    ("model.hidden", "64,64", "hidden widths, comma separated; empty for linear"),
    ("model.activation", "softplus", "tanh or softplus"),
    ("model.embed_dim", "2", "label embedding width"),
    ("train.batch_size", "64", "mini-batch size b"),
    ("train.iterations", "3000", "iterations T"),
    ("train.learning_rate", "0.001", "learning rate"),
    ("train.optimizer", "adam", "adam or sgd"),
    ("train.embed_noise", "0.3", "jitter on the embedded label coordinates"),
    ("train.privatize", "true", "false trains on v instead of the mechanism output"),
    ("train.checkpoint_every", "0", "checkpoint interval; 0 disables"),
    ("privacy.epsilon", "10", "privacy budget; inf allowed"),
    ("privacy.k", "10", "randomized-response neighbourhood size"),
    ("sampler.lambda0", "0.05", "final step size"),
    ("sampler.outer_iters", "20", "outer iterations M"),
    ("sampler.leapfrog_steps", "50", "leapfrog steps per outer iteration N"),
    ("sampler.kinetic", "gaussian", "gaussian, rayleigh or uniform"),
    ("sampler.rayleigh_sigma", "0.70710678", "Rayleigh scale; 1/sqrt(2) gives E[p^2] = 1"),
    ("sampler.uniform_lo", "-1.7320508", "uniform momentum lower bound; -sqrt(3) gives E[p^2] = 1"),
    ("sampler.uniform_hi", "1.7320508", "uniform momentum upper bound"),
    ("sampler.metropolis", "off", "off, exact_energy or path_integral"),
    ("sampler.path_steps", "16", "midpoint-rule steps for path_integral"),
    ("sampler.max_multiplier", "4", "cap on (M/m)^2; none for the plain schedule"),
    ("sampler.init_lo", "-5", "initial position lower bound"),
    ("sampler.init_hi", "5", "initial position upper bound"),
    ("generate.n", "2000", "chains, one generated sample each"),
    ("classifier.epochs", "30", "downstream classifier epochs"),
    ("classifier.learning_rate", "0.1", "downstream classifier learning rate"),
    ("output.dir", "out", "output directory"),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Generated(DatasetSpec),
    Csv(PathBuf),
}

/// Typed view of a [`RunConfig`], with cross-field checks applied.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub data: DataSource,
    pub data_n: usize,
    pub test_fraction: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub embed_dim: usize,
    pub train: TrainConfig,
    pub sampler: SamplerConfig,
    pub generate_n: usize,
    pub classifier: ClassifierConfig,
    pub output_dir: PathBuf,
}

impl RunSettings {
    pub fn mlp_spec(&self, feature_dim: usize) -> MlpSpec {
        MlpSpec::new(
            feature_dim + self.embed_dim,
            self.hidden.clone(),
            self.activation,
            self.seed,
        )
    }
}

impl RunConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown config key {key:?}"))),
        }
    }

    /// `key=value` as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        self.set(k, v)
    }

    /// Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Defaults, then the file (if any), then the overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            cfg.apply_text(&text)?;
        }
        for o in overrides {
            cfg.apply_override(o)?;
        }
        cfg.settings()?;
        Ok(cfg)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of [`render`](Self::render), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key).unwrap_or_default();
        raw.parse::<T>()
            .map_err(|_| Error::Config(format!("{key}: cannot parse {raw:?}")))
    }

    pub fn settings(&self) -> Result<RunSettings> {
        let seed: u64 = self.parsed("seed")?;
        let data = match self.get("data.path").unwrap_or_default() {
            "" => DataSource::Generated(self.get("data.spec").unwrap_or_default().parse()?),
            path => DataSource::Csv(PathBuf::from(path)),
        };
        let hidden = self
            .get("model.hidden")
            .unwrap_or_default()
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&w| w > 0)
                    .ok_or_else(|| Error::Config(format!("model.hidden: bad width {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let rr = RrConfig::new(self.parsed("privacy.epsilon")?, self.parsed("privacy.k")?)?;
        let mut train = TrainConfig::new(rr);
        train.batch_size = self.parsed("train.batch_size")?;
        train.iterations = self.parsed("train.iterations")?;
        train.learning_rate = self.parsed("train.learning_rate")?;
        train.optimizer = match self.get("train.optimizer").unwrap_or_default() {
            "adam" => Optimizer::default(),
            "sgd" => Optimizer::Sgd,
            other => return Err(Error::Config(format!("train.optimizer: unknown {other:?}"))),
        };
        train.embed_noise = self.parsed("train.embed_noise")?;
        train.privatize = self.parsed("train.privatize")?;
        train.checkpoint_every = self.parsed("train.checkpoint_every")?;
        train.seed = seed;
        train.validate()?;

        let mut sampler = SamplerConfig::new(
            self.parsed("sampler.lambda0")?,
            self.parsed("sampler.outer_iters")?,
            self.parsed("sampler.leapfrog_steps")?,
        );
        sampler.kinetic = match self.get("sampler.kinetic").unwrap_or_default() {
            "gaussian" => KineticSpec::Gaussian,
            "rayleigh" => KineticSpec::Rayleigh {
                sigma: self.parsed("sampler.rayleigh_sigma")?,
            },
            "uniform" => KineticSpec::Uniform {
                lo: self.parsed("sampler.uniform_lo")?,
                hi: self.parsed("sampler.uniform_hi")?,
            },
            other => return Err(Error::Config(format!("sampler.kinetic: unknown {other:?}"))),
        };
        sampler.metropolis = match self.get("sampler.metropolis").unwrap_or_default() {
            "off" => MetropolisMode::Off,
            "exact_energy" => MetropolisMode::ExactEnergy,
            "path_integral" => MetropolisMode::PathIntegral {
                steps: self.parsed("sampler.path_steps")?,
            },
            other => return Err(Error::Config(format!("sampler.metropolis: unknown {other:?}"))),
        };
        sampler.max_multiplier = match self.get("sampler.max_multiplier").unwrap_or_default() {
            "none" | "" => None,
            _ => Some(self.parsed("sampler.max_multiplier")?),
        };
        sampler.init_range = (self.parsed("sampler.init_lo")?, self.parsed("sampler.init_hi")?);
        sampler.seed = seed;
        sampler.validate()?;

        let classifier = ClassifierConfig {
            epochs: self.parsed("classifier.epochs")?,
            learning_rate: self.parsed("classifier.learning_rate")?,
            seed,
            ..ClassifierConfig::default()
        };
        let settings = RunSettings {
            seed,
            data,
            data_n: self.parsed("data.n")?,
            test_fraction: self.parsed("data.test_fraction")?,
            hidden,
            activation: Activation::parse(self.get("model.activation").unwrap_or_default())?,
            embed_dim: self.parsed("model.embed_dim")?,
            train,
            sampler,
            generate_n: self.parsed("generate.n")?,
            classifier,
            output_dir: PathBuf::from(self.get("output.dir").unwrap_or_default()),
        };
        if settings.generate_n == 0 {
            return Err(Error::Config("generate.n must be ≥ 1".into()));
        }
        if !(settings.test_fraction > 0.0 && settings.test_fraction < 1.0) {
            return Err(Error::Config("data.test_fraction must be in (0, 1)".into()));
        }
        Ok(settings)
    }
}
