//! Datasets, files, configuration, metrics and the end-to-end pipeline.

pub mod classifier;
pub mod config;
pub mod datasets;
pub mod mmd;
pub mod pipeline;
pub mod tensor_io;

pub use classifier::{accuracy, train_classifier, Classifier, ClassifierConfig};
pub use config::{DataSource, RunConfig, RunSettings};
pub use datasets::{gen_toy_dataset, load_dataset_csv, save_dataset_csv, train_test_split, DatasetSpec};
pub use mmd::{mmd2_rbf, mmd2_rbf_biased, Bandwidth};
pub use pipeline::{
    decode_samples, encode_samples, evaluate_generated, load_run_data, read_samples, run_embedding, run_n_classes,
    run_pipeline, EvalReport, OutputKind, OutputManifest, PipelineOutcome,
};
