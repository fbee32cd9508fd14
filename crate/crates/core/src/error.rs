use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A tape node produced NaN or ±inf.
    #[error("non-finite value at tape node {node}")]
    NonFiniteNode { node: usize },

    #[error("non-finite loss")]
    NonFiniteLoss,

    #[error("non-finite loss term at batch index {index}")]
    NonFiniteBatchLoss { index: usize },

    #[error("score network produced a non-finite output")]
    NonFiniteScore,

    #[error("training diverged at iteration {iteration}")]
    TrainingDiverged { iteration: usize },

    #[error("non-finite Hamiltonian state after leapfrog step {step}")]
    NonFiniteState { step: usize },

    #[error("sampler diverged at outer iteration {outer}, leapfrog step {step}")]
    SamplerDiverged { outer: usize, step: usize },

    #[error("zero-norm projection vector at batch index {index}")]
    ZeroNorm { index: usize },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFiniteNode { .. }
            | Error::NonFiniteLoss
            | Error::NonFiniteBatchLoss { .. }
            | Error::NonFiniteScore
            | Error::TrainingDiverged { .. }
            | Error::NonFiniteState { .. }
            | Error::SamplerDiverged { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
