//! Multinomial logistic regression for the downstream-utility metric.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Linear softmax model on standardized features.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    /// `n_classes × d`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Classifier {
    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    fn logits(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let z = (&x - &self.mean) / &self.scale;
        self.weights.dot(&z) + &self.bias
    }

    /// Argmax class, ties to the smallest index.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> usize {
        let logits = self.logits(x);
        let mut best = 0;
        for (c, &l) in logits.iter().enumerate() {
            if l > logits[best] {
                best = c;
            }
        }
        best
    }
}

fn softmax_in_place(z: &mut Array1<f64>) {
    let max = z.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    z.mapv_inplace(|v| (v - max).exp());
    let total = z.sum();
    *z /= total;
}

/// Mini-batch gradient descent on the cross-entropy.
pub fn train_classifier(train: &Dataset, cfg: &ClassifierConfig) -> Result<Classifier> {
    let present = train.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Config(format!(
            "classifier needs at least two classes, {} has {present}",
            train.name
        )));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Config(format!("invalid classifier config {cfg:?}")));
    }
    let n = train.len();
    let d = train.dim();
    let k = train.n_classes;
    let mean = train.features.mean_axis(Axis(0)).expect("nonempty");
    let scale = train
        .features
        .std_axis(Axis(0), 0.0)
        .mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let z = (&train.features - &mean) / &scale;

    let mut weights = Array2::<f64>::zeros((k, d));
    let mut bias = Array1::<f64>::zeros(k);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(cfg.seed, Stream::Classifier);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut gw = Array2::<f64>::zeros((k, d));
            let mut gb = Array1::<f64>::zeros(k);
            for &i in chunk {
                let x = z.row(i);
                let mut p = weights.dot(&x) + &bias;
                softmax_in_place(&mut p);
                p[train.labels[i]] -= 1.0;
                for c in 0..k {
                    gw.row_mut(c).scaled_add(p[c], &x);
                }
                gb += &p;
            }
            let step = cfg.learning_rate / chunk.len() as f64;
            weights.scaled_add(-step, &gw);
            bias.scaled_add(-step, &gb);
        }
    }
    Ok(Classifier {
        weights,
        bias,
        mean,
        scale,
    })
}

/// Fraction of correct argmax predictions.
pub fn accuracy(clf: &Classifier, test: &Dataset) -> Result<f64> {
    if test.dim() != clf.dim() {
        return Err(Error::DimensionMismatch {
            expected: clf.dim(),
            got: test.dim(),
        });
    }
    let correct = test
        .features
        .rows()
        .into_iter()
        .zip(&test.labels)
        .filter(|(x, &y)| clf.predict(x.view()) == y)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::datasets::{gen_toy_dataset, train_test_split, DatasetSpec};
    use ndarray::array;
    use rand::seq::SliceRandom;

    fn fixture(weights: Array2<f64>, bias: Array1<f64>) -> Classifier {
        let d = weights.ncols();
        Classifier {
            weights,
            bias,
            mean: Array1::zeros(d),
            scale: Array1::ones(d),
        }
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let test = Dataset::new("t", array![[-1.0], [-2.0], [1.0], [2.0]], vec![0, 0, 1, 1], 2, None).unwrap();
        let perfect = fixture(array![[-1.0], [1.0]], array![0.0, 0.0]);
        assert_eq!(accuracy(&perfect, &test).unwrap(), 1.0);
        let constant = fixture(array![[0.0], [0.0]], array![1.0, 0.0]);
        assert_eq!(accuracy(&constant, &test).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch() {
        let clf = fixture(array![[1.0, 0.0], [0.0, 1.0]], array![0.0, 0.0]);
        let test = Dataset::new("t", array![[1.0]], vec![0], 2, None).unwrap();
        assert!(matches!(accuracy(&clf, &test), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn separable_mixture_is_learned() {
        let ds = gen_toy_dataset(DatasetSpec::Mixture2 { sep: 6.0 }, 2000, 1).unwrap();
        let (train, test) = train_test_split(&ds, 0.3, 1).unwrap();
        let clf = train_classifier(&train, &ClassifierConfig::default()).unwrap();
        assert!(accuracy(&clf, &test).unwrap() >= 0.95);
    }

    #[test]
    fn shuffled_labels_give_chance() {
        let mut ds = gen_toy_dataset(DatasetSpec::Mixture2 { sep: 6.0 }, 4000, 2).unwrap();
        ds.labels.shuffle(&mut rng::stream(2, Stream::Data));
        let (train, test) = train_test_split(&ds, 0.5, 2).unwrap();
        let clf = train_classifier(&train, &ClassifierConfig::default()).unwrap();
        let acc = accuracy(&clf, &test).unwrap();
        let sd = (0.25 / test.len() as f64).sqrt();
        assert!((acc - 0.5).abs() < 3.0 * sd, "accuracy {acc}");
    }

    #[test]
    fn single_class_rejected() {
        let ds = Dataset::new("one", array![[1.0], [2.0]], vec![1, 1], 2, None).unwrap();
        assert!(train_classifier(&ds, &ClassifierConfig::default()).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = gen_toy_dataset(DatasetSpec::Rings, 400, 3).unwrap();
        let cfg = ClassifierConfig::default();
        assert_eq!(train_classifier(&ds, &cfg).unwrap(), train_classifier(&ds, &cfg).unwrap());
    }
}
