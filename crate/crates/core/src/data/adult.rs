//! Adult census income: missing-row removal and one-hot encoding.
//!
//! Six continuous attributes stay numeric. The eight categorical attributes
//! get one indicator column per category that occurs in the cleaned data, in
//! the order the attribute documentation lists them. After dropping rows
//! with a `?` the cleaned data has no `Never-worked` rows, which yields
//! 6 + 7 + 16 + 7 + 14 + 6 + 5 + 2 + 41 = 104 columns.

use std::path::Path;

use crate::error::{Error, Result};

pub const ADULT_FEATURES: usize = 104;

const CONTINUOUS: [(usize, &str); 6] = [
    (0, "age"),
    (2, "fnlwgt"),
    (4, "education_num"),
    (10, "capital_gain"),
    (11, "capital_loss"),
    (12, "hours_per_week"),
];

const CATEGORICAL: [(usize, &str, &[&str]); 8] = [
    (
        1,
        "workclass",
        &[
            "Private",
            "Self-emp-not-inc",
            "Self-emp-inc",
            "Federal-gov",
            "Local-gov",
            "State-gov",
            "Without-pay",
            "Never-worked",
        ],
    ),
    (
        3,
        "education",
        &[
            "Bachelors",
            "Some-college",
            "11th",
            "HS-grad",
            "Prof-school",
            "Assoc-acdm",
            "Assoc-voc",
            "9th",
            "7th-8th",
            "12th",
            "Masters",
            "1st-4th",
            "10th",
            "Doctorate",
            "5th-6th",
            "Preschool",
        ],
    ),
    (
        5,
        "marital_status",
        &[
            "Married-civ-spouse",
            "Divorced",
            "Never-married",
            "Separated",
            "Widowed",
            "Married-spouse-absent",
            "Married-AF-spouse",
        ],
    ),
    (
        6,
        "occupation",
        &[
            "Tech-support",
            "Craft-repair",
            "Other-service",
            "Sales",
            "Exec-managerial",
            "Prof-specialty",
            "Handlers-cleaners",
            "Machine-op-inspct",
            "Adm-clerical",
            "Farming-fishing",
            "Transport-moving",
            "Priv-house-serv",
            "Protective-serv",
            "Armed-Forces",
        ],
    ),
    (
        7,
        "relationship",
        &[
            "Wife",
            "Own-child",
            "Husband",
            "Not-in-family",
            "Other-relative",
            "Unmarried",
        ],
    ),
    (
        8,
        "race",
        &[
            "White",
            "Asian-Pac-Islander",
            "Amer-Indian-Eskimo",
            "Other",
            "Black",
        ],
    ),
    (9, "sex", &["Female", "Male"]),
    (
        13,
        "native_country",
        &[
            "United-States",
            "Cambodia",
            "England",
            "Puerto-Rico",
            "Canada",
            "Germany",
            "Outlying-US(Guam-USVI-etc)",
            "India",
            "Japan",
            "Greece",
            "South",
            "China",
            "Cuba",
            "Iran",
            "Honduras",
            "Philippines",
            "Italy",
            "Poland",
            "Jamaica",
            "Vietnam",
            "Mexico",
            "Portugal",
            "Ireland",
            "France",
            "Dominican-Republic",
            "Laos",
            "Ecuador",
            "Taiwan",
            "Haiti",
            "Columbia",
            "Hungary",
            "Guatemala",
            "Nicaragua",
            "Scotland",
            "Thailand",
            "Yugoslavia",
            "El-Salvador",
            "Trinadad&Tobago",
            "Peru",
            "Hong",
            "Holand-Netherlands",
        ],
    ),
];

/// One cleaned record: the 14 attribute strings and the income class.
#[derive(Debug, Clone, PartialEq)]
pub struct AdultRow {
    pub fields: Vec<String>,
    pub label: usize,
}

/// Reads `adult.data` or `adult.test`; returns the complete rows and the
/// number of rows dropped for missing values.
pub(crate) fn parse_adult(path: &Path) -> Result<(Vec<AdultRow>, usize)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_adult_text(&text, path)
}

pub(crate) fn parse_adult_text(text: &str, path: &Path) -> Result<(Vec<AdultRow>, usize)> {
    let mut rows = Vec::new();
    let mut dropped = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        // adult.test opens with a `|1x3 Cross validator` banner.
        if line.is_empty() || line.starts_with('|') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 15 {
            return Err(Error::malformed(
                path,
                format!("line {}: {} fields, expected 15", lineno + 1, fields.len()),
            ));
        }
        if fields.contains(&"?") {
            dropped += 1;
            continue;
        }
        let label = match fields[14].trim_end_matches('.') {
            "<=50K" => 0,
            ">50K" => 1,
            other => {
                return Err(Error::malformed(
                    path,
                    format!("line {}: unknown income class `{other}`", lineno + 1),
                ))
            }
        };
        rows.push(AdultRow {
            fields: fields[..14].iter().map(|s| s.to_string()).collect(),
            label,
        });
    }
    Ok((rows, dropped))
}

#[derive(Debug, Clone)]
pub struct AdultEncoding {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub feature_names: Vec<String>,
    pub numeric: Vec<bool>,
    pub train_rows: usize,
}

/// One-hot encodes cleaned train and test rows with a shared vocabulary.
/// With `expected` set, any other column count is an error.
pub fn encode_adult(
    train: &[AdultRow],
    test: &[AdultRow],
    expected: Option<usize>,
) -> Result<AdultEncoding> {
    let all = || train.iter().chain(test);
    let here = Path::new("adult");
    let mut vocab: Vec<(usize, &str, Vec<&str>)> = Vec::new();
    for (col, attr, cats) in CATEGORICAL {
        for row in all() {
            if !cats.contains(&row.fields[col].as_str()) {
                return Err(Error::malformed(
                    here,
                    format!("unknown {attr} category `{}`", row.fields[col]),
                ));
            }
        }
        let present: Vec<&str> = cats
            .iter()
            .copied()
            .filter(|c| all().any(|r| r.fields[col] == *c))
            .collect();
        vocab.push((col, attr, present));
    }

    let mut feature_names: Vec<String> = CONTINUOUS.iter().map(|(_, n)| n.to_string()).collect();
    let mut numeric = vec![true; CONTINUOUS.len()];
    for (_, attr, cats) in &vocab {
        for c in cats {
            feature_names.push(format!("{attr}={c}"));
            numeric.push(false);
        }
    }
    let width = feature_names.len();
    log::info!("adult: {width} encoded features");
    if let Some(want) = expected {
        if width != want {
            return Err(Error::malformed(
                here,
                format!("one-hot encoding produced {width} features, expected {want}"),
            ));
        }
    }

    let mut features = Vec::with_capacity(width * (train.len() + test.len()));
    for row in all() {
        for (col, name) in CONTINUOUS {
            let v: f64 = row.fields[col].parse().map_err(|_| {
                Error::malformed(
                    here,
                    format!("{name}: `{}` is not a number", row.fields[col]),
                )
            })?;
            features.push(v);
        }
        for (col, _, cats) in &vocab {
            features.extend(
                cats.iter()
                    .map(|c| f64::from(u8::from(row.fields[*col] == *c))),
            );
        }
    }
    Ok(AdultEncoding {
        features,
        labels: all().map(|r| r.label).collect(),
        feature_names,
        numeric,
        train_rows: train.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rows cycling through every category of every attribute, plus rows
    /// that must be dropped.
    fn synthetic(n: usize, offset: usize, test_file: bool) -> String {
        let mut out = String::new();
        if test_file {
            out.push_str("|1x3 Cross validator\n");
        }
        for i in 0..n {
            let k = i + offset;
            let pick = |col: usize| {
                let (_, _, cats) = CATEGORICAL.iter().find(|(c, _, _)| *c == col).unwrap();
                // Never-worked only ever appears next to a missing occupation.
                let usable = if col == 1 { &cats[..7] } else { &cats[..] };
                usable[k % usable.len()].to_string()
            };
            let label = if k.is_multiple_of(3) { ">50K" } else { "<=50K" };
            let label = if test_file {
                format!("{label}.")
            } else {
                label.to_string()
            };
            out.push_str(&format!(
                "{}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}\n",
                20 + k % 50,
                pick(1),
                100000 + k,
                pick(3),
                1 + k % 16,
                pick(5),
                pick(6),
                pick(7),
                pick(8),
                pick(9),
                k % 5000,
                k % 300,
                20 + k % 40,
                pick(13),
                label
            ));
        }
        out.push_str("39, Never-worked, 1, HS-grad, 9, Never-married, ?, Own-child, White, Male, 0, 0, 40, United-States, <=50K\n");
        out.push_str("50, Private, 1, HS-grad, 9, Divorced, Sales, Unmarried, White, Female, 0, 0, 40, ?, <=50K\n");
        out
    }

    #[test]
    fn drops_missing_rows_and_reaches_104_columns() {
        let (train, dropped_train) =
            parse_adult_text(&synthetic(60, 0, false), Path::new("adult.data")).unwrap();
        let (test, dropped_test) =
            parse_adult_text(&synthetic(20, 7, true), Path::new("adult.test")).unwrap();
        assert_eq!((dropped_train, dropped_test), (2, 2));
        assert_eq!(train.len(), 60);
        assert_eq!(test.len(), 20);
        assert!(test.iter().any(|r| r.label == 1));
        let enc = encode_adult(&train, &test, Some(ADULT_FEATURES)).unwrap();
        assert_eq!(enc.feature_names.len(), 104);
        assert_eq!(enc.features.len(), 104 * 80);
        assert_eq!(enc.train_rows, 60);
        assert!(!enc
            .feature_names
            .iter()
            .any(|n| n == "workclass=Never-worked"));
        // Each row sets exactly one indicator per categorical attribute.
        for row in enc.features.chunks(104) {
            assert_eq!(row[6..].iter().sum::<f64>(), 8.0);
        }
    }

    #[test]
    fn wrong_width_fails_loudly() {
        let (train, _) =
            parse_adult_text(&synthetic(5, 0, false), Path::new("adult.data")).unwrap();
        let err = encode_adult(&train, &[], Some(ADULT_FEATURES)).unwrap_err();
        assert!(err.to_string().contains("expected 104"));
    }

    #[test]
    fn unknown_category_is_rejected() {
        let text = "39, Astronaut, 1, HS-grad, 9, Never-married, Sales, Own-child, White, Male, 0, 0, 40, United-States, <=50K\n";
        let (rows, _) = parse_adult_text(text, Path::new("adult.data")).unwrap();
        assert!(encode_adult(&rows, &[], None).is_err());
    }
}
