use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dppm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dppm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &[&str] = &[
    "--set",
    "data.n=400",
    "--set",
    "train.iterations=300",
    "--set",
    "train.learning_rate=0.01",
    "--set",
    "model.hidden=16",
    "--set",
    "sampler.outer_iters=4",
    "--set",
    "sampler.leapfrog_steps=10",
    "--set",
    "generate.n=60",
    "--set",
    "classifier.epochs=5",
];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL.iter().copied()).collect()
}

#[test]
fn bad_arguments_and_unknown_keys_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dppm(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(dppm(&["train", "--set", "no.such.key=1"], dir.path()).status.code(), Some(1));
    assert_eq!(dppm(&["audit-privacy", "--epsilon", "-1", "--k", "10"], dir.path()).status.code(), Some(1));
}

#[test]
fn audit_passes_for_rr_and_fails_for_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dppm(&["audit-privacy", "--epsilon", "1", "--k", "5", "--trials", "20000"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("pass=true"));
    let bad = dppm(
        &["audit-privacy", "--epsilon", "1", "--k", "5", "--trials", "20000", "--mechanism", "always-keep"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(3));
    assert!(stdout(&bad).contains("pass=false"));
}

#[test]
fn divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // later overrides win, so the divergent settings go after the small preset
    let mut args = with_small(&["train", "--out", "run"]);
    args.extend(["--set", "train.optimizer=sgd", "--set", "train.learning_rate=1e12"]);
    let o = dppm(&args, dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_data_writes_labelled_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = dppm(&["gen-data", "--spec", "rings", "--n", "30", "--seed", "2", "--out", "r.csv"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x0,x1,label"));
    assert_eq!(lines.count(), 30);
}

#[test]
fn train_sample_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(dppm(&["gen-data", "--spec", "mixture2(6)", "--n", "400", "--out", "real.csv"], d).status.success());
    let real = ["--set", "data.path=real.csv"];

    let mut train = with_small(&["train", "--out", "model", "--set", "train.checkpoint_every=100"]);
    train.extend(real);
    let o = dppm(&train, d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("epsilon=10 delta=0"));
    let manifest = fs::read_to_string(d.join("model/manifest.csv")).unwrap();
    assert!(manifest.contains("checkpoint_000100.bin,params"));
    assert!(manifest.contains("loss.csv,loss"));

    let mut sample = with_small(&["sample", "--model", "model/params.bin", "--out", "gen"]);
    sample.extend(real);
    let o = dppm(&sample, d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("samples=60"));

    let o = dppm(
        &with_small(&["evaluate", "--generated", "gen/samples.bin", "--real", "real.csv", "--out", "eval"]),
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(d.join("eval/report.txt")).unwrap();
    assert_eq!(report, stdout(&o));
    assert!(report.contains("delta=0\n"));
    assert!(report.contains("epsilon=10\n"));
    assert!(report.contains("n_generated=60\n"));
    let csv = fs::read_to_string(d.join("eval/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}
