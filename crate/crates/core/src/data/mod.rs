//! Datasets, stratified splitting and train-only standardization.

mod adult;
mod canonical;
mod loaders;
mod split;

pub use adult::{encode_adult, AdultEncoding, ADULT_FEATURES};
pub use canonical::{read_canonical, write_canonical};
pub use loaders::{
    convert_raw, dataset_spec, known_datasets, load_dataset, parse_raw, DatasetSpec, RawFormat,
};
pub use split::{prepare, stratified_split, PreparedSplit, SplitPair, SplitStrategy, Standardizer};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A labelled feature matrix ready for a network: row-major, already
/// transformed.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
    n_classes: usize,
}

impl Samples {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        n_features: usize,
        n_classes: usize,
    ) -> Result<Self> {
        if features.len() != labels.len() * n_features {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_features,
                actual: features.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        Ok(Samples {
            features,
            labels,
            n_features,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }
}

/// A benchmark dataset with untransformed features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Vec<String>,
    /// Columns that get z-scored at split time; indicator columns stay 0/1.
    numeric: Vec<bool>,
    /// Rows `0..k` form the distributed training file, the rest its test file.
    standard_train_rows: Option<usize>,
    provenance: String,
}

impl Dataset {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        numeric: Vec<bool>,
        standard_train_rows: Option<usize>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(Error::InvalidConfig(
                "a dataset needs at least two classes".into(),
            ));
        }
        if numeric.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                actual: numeric.len(),
            });
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_features,
                actual: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("features must be finite".into()));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        if let Some(k) = standard_train_rows {
            if k == 0 || k >= labels.len() {
                return Err(Error::InvalidConfig(format!(
                    "standard split boundary {k} outside 1..{}",
                    labels.len()
                )));
            }
        }
        let ds = Dataset {
            name: name.into(),
            features,
            n_features,
            labels,
            class_names,
            feature_names,
            numeric,
            standard_train_rows,
            provenance: provenance.into(),
        };
        for (class, count) in ds.class_counts().into_iter().enumerate() {
            if count < 2 {
                return Err(Error::ClassTooSmall { class, count });
            }
        }
        Ok(ds)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn numeric_columns(&self) -> &[bool] {
        &self.numeric
    }

    pub fn standard_train_rows(&self) -> Option<usize> {
        self.standard_train_rows
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices grouped by class, each group in ascending order.
    pub(crate) fn rows_by_class(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            groups.entry(l).or_default().push(i);
        }
        groups
    }
}
