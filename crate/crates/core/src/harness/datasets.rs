//! Toy dataset generators and CSV ingestion.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::Dataset;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DatasetSpec {
    /// One class, `N(0, I₂)`.
    Gauss2d,
    /// Two unit-covariance classes at `±(sep/2, 0)`.
    Mixture2 { sep: f64 },
    /// Two concentric noisy rings of radius 1 and 3.
    Rings,
    /// Ten 8×8 digit glyphs with pixel noise, values in `[0, 1]`.
    GridDigits,
}

impl DatasetSpec {
    pub fn n_classes(&self) -> usize {
        match self {
            DatasetSpec::Gauss2d => 1,
            DatasetSpec::Mixture2 { .. } | DatasetSpec::Rings => 2,
            DatasetSpec::GridDigits => 10,
        }
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Gauss2d => write!(f, "gauss2d"),
            DatasetSpec::Mixture2 { sep } => write!(f, "mixture2({sep})"),
            DatasetSpec::Rings => write!(f, "rings"),
            DatasetSpec::GridDigits => write!(f, "grid_digits"),
        }
    }
}

impl FromStr for DatasetSpec {
    type Err = Error;

    /// Accepts `gauss2d`, `mixture2`, `mixture2(6)`, `mixture2:6`, `rings`,
    /// `grid_digits`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find(['(', ':']) {
            Some(i) => (&s[..i], Some(s[i + 1..].trim_end_matches(')').trim())),
            None => (s, None),
        };
        let no_arg = |spec| match arg {
            None => Ok(spec),
            Some(_) => Err(Error::Config(format!("dataset spec {name} takes no argument"))),
        };
        match name {
            "gauss2d" => no_arg(DatasetSpec::Gauss2d),
            "rings" => no_arg(DatasetSpec::Rings),
            "grid_digits" => no_arg(DatasetSpec::GridDigits),
            "mixture2" => {
                let sep = match arg {
                    None => 6.0,
                    Some(a) => a
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite() && *v >= 0.0)
                        .ok_or_else(|| Error::Config(format!("bad mixture separation {a:?}")))?,
                };
                Ok(DatasetSpec::Mixture2 { sep })
            }
            other => Err(Error::Config(format!("unknown dataset spec {other:?}"))),
        }
    }
}

// 3×5 bitmap font, rows top to bottom, bit 2 is the left column.
const GLYPHS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// Deterministic in `seed`; classes are balanced and interleaved.
pub fn gen_toy_dataset(spec: DatasetSpec, n: usize, seed: u64) -> Result<Dataset> {
    let n_classes = spec.n_classes();
    if n < 2 * n_classes {
        return Err(Error::Config(format!(
            "{spec} needs at least {} examples, got {n}",
            2 * n_classes
        )));
    }
    let mut rng = rng::stream(seed, Stream::Data);
    let labels: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
    let (features, range) = match spec {
        DatasetSpec::Gauss2d => (Array2::from_shape_simple_fn((n, 2), || StandardNormal.sample(&mut rng)), None),
        DatasetSpec::Mixture2 { sep } => {
            let mut x = Array2::<f64>::zeros((n, 2));
            for (i, mut row) in x.rows_mut().into_iter().enumerate() {
                let sign = if labels[i] == 0 { -1.0 } else { 1.0 };
                let z0: f64 = StandardNormal.sample(&mut rng);
                let z1: f64 = StandardNormal.sample(&mut rng);
                row[0] = sign * sep / 2.0 + z0;
                row[1] = z1;
            }
            (x, None)
        }
        DatasetSpec::Rings => {
            let noise = Normal::new(0.0, 0.1).expect("valid");
            let mut x = Array2::<f64>::zeros((n, 2));
            for (i, mut row) in x.rows_mut().into_iter().enumerate() {
                let r = 1.0 + 2.0 * labels[i] as f64 + noise.sample(&mut rng);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                row[0] = r * angle.cos();
                row[1] = r * angle.sin();
            }
            (x, None)
        }
        DatasetSpec::GridDigits => {
            let noise = Normal::new(0.0, 0.1).expect("valid");
            let mut x = Array2::<f64>::zeros((n, 64));
            for (i, mut row) in x.rows_mut().into_iter().enumerate() {
                let glyph = &GLYPHS[labels[i]];
                let (dr, dc) = (rng.random_range(1..=2usize), rng.random_range(1..=4usize));
                for (r, bits) in glyph.iter().enumerate() {
                    for c in 0..3 {
                        if bits >> (2 - c) & 1 == 1 {
                            row[(r + dr) * 8 + c + dc] = 1.0;
                        }
                    }
                }
                row.mapv_inplace(|p| (p + noise.sample(&mut rng)).clamp(0.0, 1.0));
            }
            (x, Some((0.0, 1.0)))
        }
    };
    Dataset::new(spec.to_string(), features, labels, n_classes, range)
}

/// Shuffled split; the test part gets `round(n · test_fraction)` rows, at
/// least one on each side.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    if ds.len() < 2 {
        return Err(Error::Config("need at least two examples to split".into()));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut rng::stream(seed, Stream::Data));
    let n_test = ((ds.len() as f64 * test_fraction).round() as usize).clamp(1, ds.len() - 1);
    let (test, train) = idx.split_at(n_test);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((
        ds.subset(&train, format!("{}-train", ds.name))?,
        ds.subset(&test, format!("{}-test", ds.name))?,
    ))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// Header `x0,…,x{d−1},label`.
pub fn write_dataset_csv(w: impl Write, ds: &Dataset) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    out.write_record(&header).map_err(csv_err)?;
    for (row, label) in ds.features.rows().into_iter().zip(&ds.labels) {
        let mut rec: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        rec.push(label.to_string());
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a CSV with a `label` column; every other column is a feature.
/// `n_classes` defaults to `max label + 1`.
pub fn read_dataset_csv(r: impl Read, name: &str, n_classes: Option<usize>) -> Result<Dataset> {
    let mut input = csv::Reader::from_reader(r);
    let header = input.headers().map_err(csv_err)?.clone();
    let label_col = header
        .iter()
        .position(|h| h.trim() == "label")
        .ok_or_else(|| Error::Format("csv has no label column".into()))?;
    let dim = header.len() - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in input.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for (j, field) in rec.iter().enumerate() {
            let field = field.trim();
            if j == label_col {
                labels.push(field.parse::<usize>().map_err(|_| {
                    Error::Format(format!("row {}: bad label {field:?}", line + 1))
                })?);
            } else {
                values.push(field.parse::<f64>().map_err(|_| {
                    Error::Format(format!("row {}: bad value {field:?}", line + 1))
                })?);
            }
        }
    }
    let features = Array2::from_shape_vec((labels.len(), dim), values)
        .map_err(|e| Error::Format(format!("csv shape: {e}")))?;
    let n_classes = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    Dataset::new(name, features, labels, n_classes, None)
}

pub fn load_dataset_csv(path: &Path, n_classes: Option<usize>) -> Result<Dataset> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    read_dataset_csv(std::fs::File::open(path)?, name, n_classes)
}

pub fn save_dataset_csv(path: &Path, ds: &Dataset) -> Result<()> {
    write_dataset_csv(std::io::BufWriter::new(std::fs::File::create(path)?), ds)
}
