//! Per-dataset raw formats as distributed by the UCI repository.

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::adult::{encode_adult, parse_adult, ADULT_FEATURES};
use crate::data::canonical::{canonical_paths, read_canonical, write_canonical};
use crate::data::Dataset;
use crate::error::{Error, Result};

pub const UCI_BASE: &str = "https://archive.ics.uci.edu/ml/machine-learning-databases";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFormat {
    /// Four measurements, then the species name.
    Iris,
    /// Cultivar (1..3) first, then 13 measurements.
    Wine,
    /// Sample id, diagnosis (`M`/`B`), then 30 measurements.
    Wdbc,
    /// 60 band energies, then `R` or `M`.
    Sonar,
    /// 34 pulse attributes, then `g` or `b`.
    Ionosphere,
    /// 64 pixel counts (0..16), then the digit. Train and test files.
    Optdigits,
    /// 14 mixed attributes and the income bracket. Train and test files.
    Adult,
}

#[derive(Debug, Clone, Copy)]
pub struct DatasetSpec {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub n_features: usize,
    pub class_names: &'static [&'static str],
    pub format: RawFormat,
    /// Raw file names, training file first, paired with their download URL.
    pub raw_files: &'static [(&'static str, &'static str)],
}

const SPECS: &[DatasetSpec] = &[
    DatasetSpec {
        name: "iris",
        aliases: &[],
        n_features: 4,
        class_names: &["Iris-setosa", "Iris-versicolor", "Iris-virginica"],
        format: RawFormat::Iris,
        raw_files: &[("iris.data", "iris/iris.data")],
    },
    DatasetSpec {
        name: "wine",
        aliases: &[],
        n_features: 13,
        class_names: &["1", "2", "3"],
        format: RawFormat::Wine,
        raw_files: &[("wine.data", "wine/wine.data")],
    },
    DatasetSpec {
        name: "breast_cancer",
        aliases: &["breast-cancer", "wdbc"],
        n_features: 30,
        class_names: &["B", "M"],
        format: RawFormat::Wdbc,
        raw_files: &[("wdbc.data", "breast-cancer-wisconsin/wdbc.data")],
    },
    DatasetSpec {
        name: "sonar",
        aliases: &[],
        n_features: 60,
        class_names: &["R", "M"],
        format: RawFormat::Sonar,
        raw_files: &[(
            "sonar.all-data",
            "undocumented/connectionist-bench/sonar/sonar.all-data",
        )],
    },
    DatasetSpec {
        name: "ionosphere",
        aliases: &[],
        n_features: 34,
        class_names: &["b", "g"],
        format: RawFormat::Ionosphere,
        raw_files: &[("ionosphere.data", "ionosphere/ionosphere.data")],
    },
    DatasetSpec {
        name: "optdigits",
        aliases: &["optical_digits", "optical-digits", "digits"],
        n_features: 64,
        class_names: &["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"],
        format: RawFormat::Optdigits,
        raw_files: &[
            ("optdigits.tra", "optdigits/optdigits.tra"),
            ("optdigits.tes", "optdigits/optdigits.tes"),
        ],
    },
    DatasetSpec {
        name: "adult",
        aliases: &["adult_income", "adult-income"],
        n_features: ADULT_FEATURES,
        class_names: &["<=50K", ">50K"],
        format: RawFormat::Adult,
        raw_files: &[
            ("adult.data", "adult/adult.data"),
            ("adult.test", "adult/adult.test"),
        ],
    },
];

pub fn known_datasets() -> &'static [DatasetSpec] {
    SPECS
}

pub fn dataset_spec(name: &str) -> Result<&'static DatasetSpec> {
    let key = name.trim().to_ascii_lowercase();
    SPECS
        .iter()
        .find(|s| s.name == key || s.aliases.contains(&key.as_str()))
        .ok_or_else(|| Error::UnknownDataset(name.to_string()))
}

impl DatasetSpec {
    pub fn url(&self, file_index: usize) -> String {
        format!("{UCI_BASE}/{}", self.raw_files[file_index].1)
    }

    fn feature_names(&self) -> Vec<String> {
        match self.format {
            RawFormat::Iris => ["sepal_length", "sepal_width", "petal_length", "petal_width"]
                .map(String::from)
                .to_vec(),
            RawFormat::Wine => [
                "alcohol",
                "malic_acid",
                "ash",
                "alcalinity_of_ash",
                "magnesium",
                "total_phenols",
                "flavanoids",
                "nonflavanoid_phenols",
                "proanthocyanins",
                "color_intensity",
                "hue",
                "od280_od315",
                "proline",
            ]
            .map(String::from)
            .to_vec(),
            RawFormat::Wdbc => {
                let base = [
                    "radius",
                    "texture",
                    "perimeter",
                    "area",
                    "smoothness",
                    "compactness",
                    "concavity",
                    "concave_points",
                    "symmetry",
                    "fractal_dimension",
                ];
                ["mean", "se", "worst"]
                    .iter()
                    .flat_map(|stat| base.iter().map(move |b| format!("{b}_{stat}")))
                    .collect()
            }
            RawFormat::Sonar => (1..=60).map(|i| format!("band_{i:02}")).collect(),
            RawFormat::Ionosphere => (1..=34).map(|i| format!("pulse_{i:02}")).collect(),
            RawFormat::Optdigits => (0..64).map(|i| format!("px_{i:02}")).collect(),
            RawFormat::Adult => unreachable!("adult names come from the encoder"),
        }
    }

    fn class_index(&self, raw: &str) -> Option<usize> {
        self.class_names.iter().position(|c| *c == raw)
    }
}

#[derive(Clone, Copy)]
enum LabelAt {
    First,
    Second,
    Last,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Comma-separated numeric rows with one label field.
fn parse_numeric(
    spec: &DatasetSpec,
    path: &Path,
    label_at: LabelAt,
    features: &mut Vec<f64>,
    labels: &mut Vec<usize>,
) -> Result<()> {
    let text = read_text(path)?;
    let d = spec.n_features;
    let width = match label_at {
        LabelAt::Second => d + 2,
        _ => d + 1,
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(Error::malformed(
                path,
                format!(
                    "line {}: {} fields, expected {width}",
                    lineno + 1,
                    fields.len()
                ),
            ));
        }
        let (label, values): (&str, Vec<&str>) = match label_at {
            LabelAt::First => (fields[0], fields[1..].to_vec()),
            LabelAt::Second => (fields[1], fields[2..].to_vec()),
            LabelAt::Last => (fields[d], fields[..d].to_vec()),
        };
        let class = spec.class_index(label).ok_or_else(|| {
            Error::malformed(
                path,
                format!("line {}: unknown class `{label}`", lineno + 1),
            )
        })?;
        for v in values {
            features.push(v.parse().map_err(|_| {
                Error::malformed(path, format!("line {}: `{v}` is not a number", lineno + 1))
            })?);
        }
        labels.push(class);
    }
    Ok(())
}

/// Parses the raw distribution files found in `dir`.
pub fn parse_raw(spec: &DatasetSpec, dir: &Path) -> Result<Dataset> {
    let path = |i: usize| dir.join(spec.raw_files[i].0);
    let provenance = format!("{} ({})", spec.url(0), dir.display());
    if spec.format == RawFormat::Adult {
        let (train, dropped_train) = parse_adult(&path(0))?;
        let (test, dropped_test) = parse_adult(&path(1))?;
        log::info!(
            "adult: dropped {} rows with missing values ({dropped_train} train, {dropped_test} test)",
            dropped_train + dropped_test
        );
        let enc = encode_adult(&train, &test, Some(ADULT_FEATURES))?;
        return Dataset::new(
            spec.name,
            enc.features,
            enc.labels,
            enc.feature_names,
            spec.class_names.iter().map(|s| s.to_string()).collect(),
            enc.numeric,
            Some(enc.train_rows),
            provenance,
        );
    }
    let label_at = match spec.format {
        RawFormat::Wine => LabelAt::First,
        RawFormat::Wdbc => LabelAt::Second,
        _ => LabelAt::Last,
    };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    parse_numeric(spec, &path(0), label_at, &mut features, &mut labels)?;
    let mut standard_train_rows = None;
    if spec.raw_files.len() > 1 {
        standard_train_rows = Some(labels.len());
        parse_numeric(spec, &path(1), label_at, &mut features, &mut labels)?;
    }
    let names = spec.feature_names();
    Dataset::new(
        spec.name,
        features,
        labels,
        names,
        spec.class_names.iter().map(|s| s.to_string()).collect(),
        vec![true; spec.n_features],
        standard_train_rows,
        provenance,
    )
}

/// Loads `name` from `dir`, preferring the canonical cache and falling back
/// to the raw distribution files.
pub fn load_dataset(name: &str, dir: &Path) -> Result<Dataset> {
    let spec = dataset_spec(name)?;
    let (cached, _) = canonical_paths(dir, spec.name);
    if cached.exists() {
        return read_canonical(spec, dir);
    }
    if spec.raw_files.iter().all(|(f, _)| dir.join(f).exists()) {
        return parse_raw(spec, dir);
    }
    Err(Error::malformed(
        cached,
        format!(
            "neither the cache nor the raw files ({}) exist; run `randcloud fetch-data`",
            spec.raw_files
                .iter()
                .map(|(f, _)| *f)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ))
}

/// Parses raw files in `raw_dir` and writes the canonical cache into `out_dir`.
pub fn convert_raw(name: &str, raw_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = dataset_spec(name)?;
    let ds = parse_raw(spec, raw_dir)?;
    write_canonical(&ds, out_dir)
}
