//! Train, sample, and evaluate in one run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use sha2::{Digest, Sha256};

use super::classifier::{accuracy, train_classifier, ClassifierConfig};
use super::config::{DataSource, RunConfig, RunSettings};
use super::datasets::{gen_toy_dataset, load_dataset_csv, train_test_split};
use super::mmd::{mmd2_rbf, Bandwidth};
use super::tensor_io::write_tensor_to;
use crate::data::Dataset;
use crate::privacy::PrivacyLedger;
use crate::sampler::{generate_samples, ChainStats};
use crate::scoremodel::{unembed, write_params_to, EmbeddedSample, EmbeddingMatrix};
use crate::training::{train, write_loss_csv};
use crate::{Error, Result};

/// Kinds of file a run may emit. Raw features have no kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputKind {
    Config,
    Params,
    LossTrace,
    Samples,
    SampleManifest,
    Report,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Config => "config",
            OutputKind::Params => "params",
            OutputKind::LossTrace => "loss",
            OutputKind::Samples => "samples",
            OutputKind::SampleManifest => "sample_manifest",
            OutputKind::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub kind: OutputKind,
    pub bytes: usize,
    pub sha256: String,
}

/// The single writer for a run directory; `manifest.csv` lists every file.
#[derive(Debug)]
pub struct OutputManifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.csv";

impl OutputManifest {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputManifest {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn write(&mut self, name: &str, kind: OutputKind, bytes: &[u8]) -> Result<PathBuf> {
        if name.contains(['/', '\\']) || name == MANIFEST_FILE {
            return Err(Error::Config(format!("invalid output name {name:?}")));
        }
        if self.entries.iter().any(|e| e.path == name) {
            return Err(Error::Config(format!("output {name} written twice")));
        }
        let path = self.root.join(name);
        std::fs::write(&path, bytes)?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            kind,
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    pub fn finish(self) -> Result<Vec<ManifestEntry>> {
        let mut text = String::from("path,kind,bytes,sha256\n");
        for e in &self.entries {
            let _ = writeln!(text, "{},{},{},{}", e.path, e.kind.name(), e.bytes, e.sha256);
        }
        std::fs::write(self.root.join(MANIFEST_FILE), text)?;
        Ok(self.entries)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub config_hash: String,
    pub epsilon: f64,
    pub delta: f64,
    pub k: usize,
    pub mechanism_invocations: u64,
    pub n_generated: usize,
    /// Classifier trained on generated data, scored on held-out real data.
    pub downstream_accuracy: f64,
    /// Same classifier trained on the real training split.
    pub baseline_accuracy: f64,
    /// `max(0, mmd2_raw)`.
    pub mmd2: f64,
    pub mmd2_raw: f64,
    pub class_counts: Vec<usize>,
    pub acceptance_rate: f64,
}

const CSV_COLUMNS: &[&str] = &[
    "config_hash",
    "epsilon",
    "delta",
    "k",
    "mechanism_invocations",
    "n_generated",
    "downstream_accuracy",
    "baseline_accuracy",
    "mmd2",
    "mmd2_raw",
    "class_counts",
    "acceptance_rate",
];

impl EvalReport {
    fn fields(&self) -> Vec<String> {
        let counts: Vec<String> = self.class_counts.iter().map(usize::to_string).collect();
        vec![
            self.config_hash.clone(),
            self.epsilon.to_string(),
            self.delta.to_string(),
            self.k.to_string(),
            self.mechanism_invocations.to_string(),
            self.n_generated.to_string(),
            format!("{:.6}", self.downstream_accuracy),
            format!("{:.6}", self.baseline_accuracy),
            format!("{:.8}", self.mmd2),
            format!("{:.8}", self.mmd2_raw),
            counts.join(";"),
            format!("{:.6}", self.acceptance_rate),
        ]
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in CSV_COLUMNS.iter().zip(self.fields()) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().join(",")
    }
}

/// Real data for a run, split into training and held-out parts.
pub fn load_run_data(settings: &RunSettings) -> Result<(Dataset, Dataset)> {
    let full = match &settings.data {
        DataSource::Generated(spec) => gen_toy_dataset(*spec, settings.data_n, settings.seed)?,
        DataSource::Csv(path) => load_dataset_csv(path, None)?,
    };
    train_test_split(&full, settings.test_fraction, settings.seed)
}

/// Number of classes of the configured data source.
pub fn run_n_classes(settings: &RunSettings) -> Result<usize> {
    match &settings.data {
        DataSource::Generated(spec) => Ok(spec.n_classes()),
        DataSource::Csv(path) => Ok(load_dataset_csv(path, None)?.n_classes),
    }
}

/// The fixed embedding a run derives from its seed.
pub fn run_embedding(settings: &RunSettings, n_classes: usize) -> Result<EmbeddingMatrix> {
    EmbeddingMatrix::seeded(n_classes, settings.embed_dim, settings.seed)
}

/// Reads `samples.bin` and the `chain,index,label` manifest next to it
/// (same stem, `.csv`).
pub fn read_samples(tensor_path: &Path, n_classes: Option<usize>) -> Result<Dataset> {
    let features = super::tensor_io::read_matrix(tensor_path)?;
    let manifest = tensor_path.with_extension("csv");
    let text = std::fs::read_to_string(&manifest)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", manifest.display())))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("chain,index,label") {
        return Err(Error::Format(format!("{} lacks the chain,index,label header", manifest.display())));
    }
    let mut labels = vec![None; features.nrows()];
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols[..] {
            [_, index, label] => index.parse::<usize>().ok().zip(label.parse::<usize>().ok()),
            _ => None,
        };
        let (index, label) = parsed.ok_or_else(|| Error::Format(format!("bad manifest line {line:?}")))?;
        *labels
            .get_mut(index)
            .ok_or_else(|| Error::Format(format!("manifest index {index} out of range")))? = Some(label);
    }
    let labels: Vec<usize> = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Format(format!("sample {i} has no label"))))
        .collect::<Result<_>>()?;
    let n_classes = n_classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Dataset::new("generated", features, labels, n_classes, None)
}

/// Decodes generated samples into a labeled dataset.
pub fn decode_samples(samples: &[EmbeddedSample], e: &EmbeddingMatrix) -> Result<Dataset> {
    let d = samples.first().map_or(0, |s| s.feature_dim);
    let mut features = Array2::<f64>::zeros((samples.len(), d));
    let mut labels = Vec::with_capacity(samples.len());
    for (mut row, s) in features.rows_mut().into_iter().zip(samples) {
        let (x, y) = unembed(s, e);
        row.assign(&ndarray::ArrayView1::from(&x[..]));
        labels.push(y);
    }
    Dataset::new("generated", features, labels, e.n_classes(), None)
}

/// Downstream metrics for an already generated dataset.
pub fn evaluate_generated(
    generated: &Dataset,
    real_train: &Dataset,
    real_test: &Dataset,
    classifier: &ClassifierConfig,
    ledger: &PrivacyLedger,
    k: usize,
    config_hash: &str,
) -> Result<EvalReport> {
    let clf = train_classifier(generated, classifier)?;
    let downstream_accuracy = accuracy(&clf, real_test)?;
    let baseline = train_classifier(real_train, classifier)?;
    let baseline_accuracy = accuracy(&baseline, real_test)?;
    let mmd2_raw = mmd2_rbf(generated.features.view(), real_test.features.view(), Bandwidth::Median)?;
    let (epsilon, delta) = ledger.report();
    Ok(EvalReport {
        config_hash: config_hash.to_string(),
        epsilon,
        delta,
        k,
        mechanism_invocations: ledger.mechanism_invocations(),
        n_generated: generated.len(),
        downstream_accuracy,
        baseline_accuracy,
        mmd2: mmd2_raw.max(0.0),
        mmd2_raw,
        class_counts: generated.class_counts(),
        acceptance_rate: 1.0,
    })
}

pub struct PipelineOutcome {
    pub report: EvalReport,
    pub generated: Dataset,
    pub ledger: PrivacyLedger,
    pub chain_stats: ChainStats,
    pub manifest: Option<Vec<ManifestEntry>>,
}

/// Samples as a binary tensor plus the `chain,index,label` manifest.
pub fn encode_samples(generated: &Dataset) -> Result<(Vec<u8>, String)> {
    let mut tensor = Vec::new();
    write_tensor_to(&mut tensor, &generated.features.clone().into_dyn())?;
    let mut manifest = String::from("chain,index,label\n");
    for (i, y) in generated.labels.iter().enumerate() {
        let _ = writeln!(manifest, "{i},{i},{y}");
    }
    Ok((tensor, manifest))
}

/// Runs every stage; when `output` is set, writes the run directory through
/// an [`OutputManifest`].
pub fn run_pipeline(cfg: &RunConfig, output: Option<&Path>) -> Result<PipelineOutcome> {
    let settings = cfg.settings()?;
    let hash = cfg.hash();
    let (real_train, real_test) = load_run_data(&settings).map_err(|e| e.in_stage("data"))?;

    let e = run_embedding(&settings, real_train.n_classes).map_err(|e| e.in_stage("train"))?;
    let spec = settings.mlp_spec(real_train.dim());
    let trained = train(&real_train, &e, &spec, &settings.train).map_err(|e| e.in_stage("train"))?;
    let mut ledger = trained.ledger.clone();

    let (samples, chain_stats) = generate_samples(&trained.params, &e, &settings.sampler, settings.generate_n)
        .map_err(|e| e.in_stage("sample"))?;
    ledger.register_post_processing(format!("sampling {} chains", samples.len()));
    let generated = decode_samples(&samples, &e).map_err(|e| e.in_stage("sample"))?;
    ledger.register_post_processing("downstream classifier");

    let mut report = evaluate_generated(
        &generated,
        &real_train,
        &real_test,
        &settings.classifier,
        &ledger,
        settings.train.rr.k(),
        &hash,
    )
    .map_err(|e| e.in_stage("evaluate"))?;
    report.acceptance_rate = chain_stats.acceptance_rate();

    let manifest = match output {
        None => None,
        Some(dir) => {
            let mut out = OutputManifest::create(dir)?;
            out.write("config.txt", OutputKind::Config, cfg.render().as_bytes())?;
            let mut params = Vec::new();
            write_params_to(&mut params, &trained.params)?;
            out.write("params.bin", OutputKind::Params, &params)?;
            let mut loss = Vec::new();
            write_loss_csv(&mut loss, &trained.loss_trace)?;
            out.write("loss.csv", OutputKind::LossTrace, &loss)?;
            let (tensor, sample_manifest) = encode_samples(&generated)?;
            out.write("samples.bin", OutputKind::Samples, &tensor)?;
            out.write("samples.csv", OutputKind::SampleManifest, sample_manifest.as_bytes())?;
            out.write("report.txt", OutputKind::Report, report.to_key_values().as_bytes())?;
            let csv = format!("{}\n{}\n", EvalReport::csv_header(), report.csv_row());
            out.write("report.csv", OutputKind::Report, csv.as_bytes())?;
            Some(out.finish()?)
        }
    };

    Ok(PipelineOutcome {
        report,
        generated,
        ledger,
        chain_stats,
        manifest,
    })
}
