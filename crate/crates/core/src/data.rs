//! Labeled feature matrices.

use ndarray::{Array2, ArrayView1, Axis};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// `n × d`, one example per row.
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub value_range: (f64, f64),
}

impl Dataset {
    /// Validates the invariants; `value_range` defaults to the observed range.
    pub fn new(
        name: impl Into<String>,
        features: Array2<f64>,
        labels: Vec<usize>,
        n_classes: usize,
        value_range: Option<(f64, f64)>,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Config("dataset is empty".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("dataset contains non-finite features".into()));
        }
        let observed = features
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let value_range = match value_range {
            Some((lo, hi)) => {
                if observed.0 < lo || observed.1 > hi {
                    return Err(Error::Config(format!(
                        "features span [{}, {}] outside the declared range [{lo}, {hi}]",
                        observed.0, observed.1
                    )));
                }
                (lo, hi)
            }
            None => observed,
        };
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            n_classes,
            value_range,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(name, features, labels, self.n_classes, Some(self.value_range))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_labels_and_empty_data() {
        let err = Dataset::new("t", array![[0.0]], vec![2], 2, None).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { label: 2, n_classes: 2 }));
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(Dataset::new("t", empty, vec![], 2, None).is_err());
    }

    #[test]
    fn range_defaults_to_observed() {
        let d = Dataset::new("t", array![[-1.0, 2.0], [0.5, 3.0]], vec![0, 1], 2, None).unwrap();
        assert_eq!(d.value_range, (-1.0, 3.0));
        assert_eq!(d.class_counts(), vec![1, 1]);
        assert!(Dataset::new("t", array![[5.0]], vec![0], 1, Some((0.0, 1.0))).is_err());
    }
}
