//! Differentially private probabilistic models.
//!
//! A score network is trained with sliced score matching in which the
//! projection vector entering the Hessian term is replaced by the output of a
//! pure-ε randomized-response mechanism over its top-k cosine neighbourhood.
//! Labeled synthetic data is then drawn from the trained score with
//! Hamiltonian dynamics and decoded through a fixed label embedding.
//!
//! Module map:
//! - [`diffkit`]: forward-mode duals, a reverse-mode tape and their composition
//!   (reverse-over-forward) for the second-order term of the loss.
//! - [`scoremodel`]: the MLP score network, label embedding and the params file.
//! - [`privacy`]: randomized response, neighbourhoods, the ledger and the auditor.
//! - [`training`]: the mini-batch training loop.
//! - [`sampler`]: leapfrog integration, momentum refresh and chain execution.
//! - [`harness`]: datasets, file formats, configuration, metrics and the pipeline.

pub mod data;
pub mod diffkit;
pub mod error;
pub mod harness;
pub mod privacy;
pub mod rng;
pub mod sampler;
pub mod scoremodel;
pub mod training;

pub use error::{Error, Result};
