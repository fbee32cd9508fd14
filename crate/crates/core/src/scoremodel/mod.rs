//! Score network and label embedding.
//!
//! The network output is read as `s_θ(u) ≈ ∇_u log p(u)`: it points toward
//! higher data density and is used directly as the drift during sampling.

mod embedding;
mod io;
mod mlp;

pub use embedding::{embed, unembed, EmbeddedSample, EmbeddingMatrix};
pub use io::{load_params, read_params_from, save_params, write_params_to, PARAMS_FORMAT_VERSION};
pub use mlp::{init_params, score, score_jvp, tape_score, Activation, LayerShape, MlpSpec, Params};
