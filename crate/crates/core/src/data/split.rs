use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Samples};
use crate::error::{Error, Result};
use crate::rng::{Domain, Stream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPair {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// `None` for a dataset's distributed train/test partition.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitStrategy {
    /// The distributed train/test files when the dataset has them, otherwise
    /// a stratified split with the given parameters.
    Standard { test_fraction: f64, seed: u64 },
    /// Always pool every row and split stratified.
    Stratified { test_fraction: f64, seed: u64 },
}

impl Default for SplitStrategy {
    fn default() -> Self {
        SplitStrategy::Standard {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

impl SplitStrategy {
    pub fn split(&self, ds: &Dataset) -> Result<SplitPair> {
        match *self {
            SplitStrategy::Standard {
                test_fraction,
                seed,
            } => match ds.standard_train_rows() {
                Some(k) => Ok(SplitPair {
                    train: (0..k).collect(),
                    test: (k..ds.len()).collect(),
                    seed: None,
                }),
                None => stratified_split(ds, test_fraction, seed),
            },
            SplitStrategy::Stratified {
                test_fraction,
                seed,
            } => stratified_split(ds, test_fraction, seed),
        }
    }
}

/// Per-class shuffled partition. Class `c` with `n_c` rows contributes
/// `round(test_fraction * n_c)` rows to the test side, clamped so both sides
/// keep at least one row of every class. Both index lists come back sorted.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut rng = Stream::substream(seed, Domain::Split, 0);
    let mut train = Vec::with_capacity(ds.len());
    let mut test = Vec::new();
    for (class, mut rows) in ds.rows_by_class() {
        let n = rows.len();
        if n < 2 {
            return Err(Error::ClassTooSmall { class, count: n });
        }
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        rng.shuffle(&mut rows);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPair {
        train,
        test,
        seed: Some(seed),
    })
}

/// Column-wise z-score fitted on training rows only. Indicator columns and
/// constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Number of rows the statistics were computed from.
    pub fitted_rows: usize,
}

impl Standardizer {
    pub fn fit(ds: &Dataset, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("rows to fit a standardizer"));
        }
        let d = ds.n_features();
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        let mut scales = vec![1.0; d];
        for j in 0..d {
            if !ds.numeric_columns()[j] {
                continue;
            }
            let mean = rows.iter().map(|&r| ds.row(r)[j]).sum::<f64>() / n;
            let var = rows
                .iter()
                .map(|&r| (ds.row(r)[j] - mean).powi(2))
                .sum::<f64>()
                / n;
            means[j] = mean;
            let sd = var.sqrt();
            if sd > 1e-12 {
                scales[j] = sd;
            }
        }
        Ok(Standardizer {
            means,
            scales,
            fitted_rows: rows.len(),
        })
    }

    pub fn transform(&self, ds: &Dataset, rows: &[usize]) -> Result<Samples> {
        let d = ds.n_features();
        let mut features = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            features.extend(
                ds.row(r)
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (v - self.means[j]) / self.scales[j]),
            );
        }
        let labels = rows.iter().map(|&r| ds.labels()[r]).collect();
        Samples::new(features, labels, d, ds.n_classes())
    }
}

/// Train/test samples for one split, standardized with train statistics.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub train: Samples,
    pub test: Samples,
    pub standardizer: Standardizer,
    pub split: SplitPair,
}

pub fn prepare(ds: &Dataset, split: SplitPair) -> Result<PreparedSplit> {
    let standardizer = Standardizer::fit(ds, &split.train)?;
    Ok(PreparedSplit {
        train: standardizer.transform(ds, &split.train)?,
        test: standardizer.transform(ds, &split.test)?,
        standardizer,
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(counts: &[usize]) -> Dataset {
        let labels: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        let features = (0..labels.len()).map(|i| i as f64).collect();
        Dataset::new(
            "toy",
            features,
            labels,
            vec!["x".into()],
            (0..counts.len()).map(|c| c.to_string()).collect(),
            vec![true],
            None,
            "test",
        )
        .unwrap()
    }

    #[test]
    fn exact_stratification_on_balanced_toy() {
        let ds = toy(&[5, 5]);
        let s = stratified_split(&ds, 0.2, 1).unwrap();
        let test_labels: Vec<usize> = s.test.iter().map(|&i| ds.labels()[i]).collect();
        assert_eq!(test_labels.iter().filter(|&&l| l == 0).count(), 1);
        assert_eq!(test_labels.iter().filter(|&&l| l == 1).count(), 1);
        assert_eq!(s.train.len(), 8);
    }

    #[test]
    fn same_seed_same_split() {
        let ds = toy(&[30, 20, 11]);
        assert_eq!(
            stratified_split(&ds, 0.2, 9).unwrap(),
            stratified_split(&ds, 0.2, 9).unwrap()
        );
        assert_ne!(
            stratified_split(&ds, 0.2, 9).unwrap(),
            stratified_split(&ds, 0.2, 10).unwrap()
        );
    }

    #[test]
    fn split_sizes_match_published_train_counts() {
        // Class counts of Sonar, Ionosphere, Breast Cancer, Wine and Iris.
        for (counts, train) in [
            (&[97, 111][..], 167),
            (&[126, 225][..], 281),
            (&[357, 212][..], 456),
            (&[59, 71, 48][..], 142),
            (&[50, 50, 50][..], 120),
        ] {
            let s = stratified_split(&toy(counts), 0.2, 0).unwrap();
            assert_eq!(s.train.len(), train, "{counts:?}");
        }
    }

    #[test]
    fn singleton_class_is_rejected() {
        let mut labels = vec![0; 6];
        labels.push(1);
        let err = Dataset::new(
            "x",
            vec![0.0; 7],
            labels,
            vec!["a".into()],
            vec!["0".into(), "1".into()],
            vec![true],
            None,
            "",
        );
        assert!(matches!(
            err,
            Err(Error::ClassTooSmall { class: 1, count: 1 })
        ));
    }

    #[test]
    fn standardizer_ignores_test_rows() {
        let ds = toy(&[10, 10]);
        let split = stratified_split(&ds, 0.2, 3).unwrap();
        let fitted = Standardizer::fit(&ds, &split.train).unwrap();
        // Perturbing a test row must not move the fitted statistics.
        let mut features = ds.features().to_vec();
        features[split.test[0]] += 1000.0;
        let moved = Dataset::new(
            "toy",
            features,
            ds.labels().to_vec(),
            ds.feature_names().to_vec(),
            ds.class_names().to_vec(),
            vec![true],
            None,
            "",
        )
        .unwrap();
        assert_eq!(Standardizer::fit(&moved, &split.train).unwrap(), fitted);
        assert_eq!(fitted.fitted_rows, split.train.len());
        let train = fitted.transform(&ds, &split.train).unwrap();
        let mean: f64 = train.features().iter().sum::<f64>() / train.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn standard_strategy_uses_distributed_partition() {
        let ds = Dataset::new(
            "x",
            (0..8).map(f64::from).collect(),
            vec![0, 1, 0, 1, 0, 1, 0, 1],
            vec!["a".into()],
            vec!["0".into(), "1".into()],
            vec![true],
            Some(6),
            "",
        )
        .unwrap();
        let s = SplitStrategy::default().split(&ds).unwrap();
        assert_eq!(s.train, (0..6).collect::<Vec<_>>());
        assert_eq!(s.test, vec![6, 7]);
        let pooled = SplitStrategy::Stratified {
            test_fraction: 0.25,
            seed: 0,
        }
        .split(&ds)
        .unwrap();
        assert_eq!(pooled.test.len(), 2);
    }

    proptest! {
        #[test]
        fn split_is_a_stratified_partition(
            counts in proptest::collection::vec(2usize..60, 2..5),
            seed in any::<u64>(),
        ) {
            let ds = toy(&counts);
            let s = stratified_split(&ds, 0.2, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
            for (c, &n) in counts.iter().enumerate() {
                let in_test = s.test.iter().filter(|&&i| ds.labels()[i] == c).count() as f64;
                prop_assert!((in_test - 0.2 * n as f64).abs() <= 1.0);
            }
        }
    }
}
