use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dppm::harness::pipeline::{
    encode_samples, evaluate_generated, load_run_data, read_samples, run_embedding, run_n_classes,
    EvalReport, OutputKind, OutputManifest,
};
use dppm::harness::{gen_toy_dataset, run_pipeline, save_dataset_csv, DatasetSpec, RunConfig};
use dppm::privacy::{audit_ratio, audit_ratio_with, PrivacyLedger, RrConfig};
use dppm::sampler::generate_samples;
use dppm::scoremodel::{load_params, write_params_to};
use dppm::training::{train_with_checkpoints, write_loss_csv};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(name = "dppm", version, about = "Differentially private probabilistic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> dppm::Result<(RunConfig, PathBuf)> {
        let cfg = RunConfig::load(self.config.as_deref(), &self.overrides)?;
        let out = match &self.out {
            Some(p) => p.clone(),
            None => cfg.settings()?.output_dir,
        };
        Ok((cfg, out))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AuditMechanism {
    /// The randomized-response mechanism under test.
    Rr,
    /// Test fixture that never randomizes; must fail the audit.
    AlwaysKeep,
}

#[derive(Subcommand)]
enum Command {
    /// Train a score model; writes params, loss trace and checkpoints.
    Train(ConfigArgs),
    /// Draw samples from a trained model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Score generated samples against real data.
    Evaluate {
        /// `samples.bin` with its `samples.csv` manifest alongside.
        #[arg(long)]
        generated: PathBuf,
        /// Real dataset CSV; split into train/test by the configured fraction.
        #[arg(long)]
        real: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Empirical privacy audit of the mechanism.
    AuditPrivacy {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = AuditMechanism::Rr)]
        mechanism: AuditMechanism,
    },
    /// Generate a toy dataset as CSV.
    GenData {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path; defaults to `<spec>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train, sample and evaluate in one go.
    Run(ConfigArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG })
        }
    }
}

fn dispatch(command: Command) -> dppm::Result<ExitCode> {
    match command {
        Command::Train(args) => cmd_train(&args),
        Command::Sample { model, args } => cmd_sample(&model, &args),
        Command::Evaluate { generated, real, args } => cmd_evaluate(&generated, &real, &args),
        Command::AuditPrivacy {
            epsilon,
            k,
            trials,
            seed,
            mechanism,
        } => {
            let cfg = RrConfig::new(epsilon, k)?;
            let report = match mechanism {
                AuditMechanism::Rr => audit_ratio(&cfg, trials, seed)?,
                AuditMechanism::AlwaysKeep => audit_ratio_with(&cfg, trials, seed, |i, _, _| i)?,
            };
            println!("{report}");
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_AUDIT) })
        }
        Command::GenData { spec, n, seed, out } => {
            let spec: DatasetSpec = spec.parse()?;
            let ds = gen_toy_dataset(spec, n, seed)?;
            let path = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.to_string().replace(['(', ')'], ""))));
            save_dataset_csv(&path, &ds)?;
            println!("wrote {} rows x {} features, {} classes to {}", ds.len(), ds.dim(), ds.n_classes, path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let (cfg, out) = args.load()?;
            let outcome = run_pipeline(&cfg, Some(&out))?;
            print!("{}", outcome.report.to_key_values());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_train(args: &ConfigArgs) -> dppm::Result<ExitCode> {
    let (cfg, out_dir) = args.load()?;
    let settings = cfg.settings()?;
    let (real_train, _) = load_run_data(&settings).map_err(|e| e.in_stage("data"))?;
    let e = run_embedding(&settings, real_train.n_classes)?;
    let spec = settings.mlp_spec(real_train.dim());
    let mut out = OutputManifest::create(&out_dir)?;
    out.write("config.txt", OutputKind::Config, cfg.render().as_bytes())?;
    let outcome = train_with_checkpoints(&real_train, &e, &spec, &settings.train, |iteration, params| {
        let mut bytes = Vec::new();
        write_params_to(&mut bytes, params)?;
        out.write(&format!("checkpoint_{iteration:06}.bin"), OutputKind::Params, &bytes)?;
        Ok(())
    })
    .map_err(|e| e.in_stage("train"))?;
    let mut bytes = Vec::new();
    write_params_to(&mut bytes, &outcome.params)?;
    out.write("params.bin", OutputKind::Params, &bytes)?;
    let mut loss = Vec::new();
    write_loss_csv(&mut loss, &outcome.loss_trace)?;
    out.write("loss.csv", OutputKind::LossTrace, &loss)?;
    out.finish()?;
    let (eps, delta) = outcome.ledger.report();
    println!(
        "iterations={} final_loss={:.6} epsilon={eps} delta={delta} mechanism_invocations={} out={}",
        outcome.loss_trace.len(),
        outcome.loss_trace.last().copied().unwrap_or(f64::NAN),
        outcome.ledger.mechanism_invocations(),
        out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(model: &Path, args: &ConfigArgs) -> dppm::Result<ExitCode> {
    let (cfg, out_dir) = args.load()?;
    let settings = cfg.settings()?;
    let params = load_params(model)?;
    let e = run_embedding(&settings, run_n_classes(&settings)?)?;
    let (samples, stats) =
        generate_samples(&params, &e, &settings.sampler, settings.generate_n).map_err(|e| e.in_stage("sample"))?;
    let generated = dppm::harness::decode_samples(&samples, &e)?;
    let (tensor, manifest) = encode_samples(&generated)?;
    let mut out = OutputManifest::create(&out_dir)?;
    out.write("samples.bin", OutputKind::Samples, &tensor)?;
    out.write("samples.csv", OutputKind::SampleManifest, manifest.as_bytes())?;
    out.finish()?;
    let counts: Vec<String> = generated.class_counts().iter().map(usize::to_string).collect();
    println!(
        "samples={} class_counts={} acceptance_rate={:.6} out={}",
        generated.len(),
        counts.join(";"),
        stats.acceptance_rate(),
        out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_evaluate(generated: &Path, real: &Path, args: &ConfigArgs) -> dppm::Result<ExitCode> {
    let (mut cfg, out_dir) = args.load()?;
    cfg.set("data.path", &real.to_string_lossy())?;
    let settings = cfg.settings()?;
    let (real_train, real_test) = load_run_data(&settings).map_err(|e| e.in_stage("data"))?;
    let generated = read_samples(generated, Some(real_train.n_classes))?;
    let mut ledger = PrivacyLedger::new(settings.train.rr.epsilon());
    ledger.register_post_processing("evaluation of released samples");
    let report = evaluate_generated(
        &generated,
        &real_train,
        &real_test,
        &settings.classifier,
        &ledger,
        settings.train.rr.k(),
        &cfg.hash(),
    )
    .map_err(|e| e.in_stage("evaluate"))?;
    let mut out = OutputManifest::create(&out_dir)?;
    out.write("report.txt", OutputKind::Report, report.to_key_values().as_bytes())?;
    let csv = format!("{}\n{}\n", EvalReport::csv_header(), report.csv_row());
    out.write("report.csv", OutputKind::Report, csv.as_bytes())?;
    out.finish()?;
    print!("{}", report.to_key_values());
    Ok(ExitCode::SUCCESS)
}
