//! Classification metrics.

use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::nn::{argmax, Network, Topology};
use crate::topology::reduction_percent;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub auc_roc: f64,
    pub reduction_percent: f64,
}

impl MetricSet {
    /// Component-wise mean.
    pub fn mean(sets: &[MetricSet]) -> Option<MetricSet> {
        if sets.is_empty() {
            return None;
        }
        let n = sets.len() as f64;
        let avg = |f: fn(&MetricSet) -> f64| sets.iter().map(f).sum::<f64>() / n;
        Some(MetricSet {
            accuracy: avg(|m| m.accuracy),
            macro_f1: avg(|m| m.macro_f1),
            auc_roc: avg(|m| m.auc_roc),
            reduction_percent: avg(|m| m.reduction_percent),
        })
    }
}

/// Test-set metrics of `net`, with the reduction measured against `topology_0`.
pub fn evaluate_network(net: &Network, test: &Samples, topology_0: &Topology) -> Result<MetricSet> {
    let scores = net.outputs(test)?;
    let pred: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
    Ok(MetricSet {
        accuracy: accuracy(&pred, test.labels())?,
        macro_f1: macro_f1(&pred, test.labels(), test.n_classes())?,
        auc_roc: auc_roc(&scores, test.labels(), test.n_classes())?,
        reduction_percent: reduction_percent(topology_0, net.topology()),
    })
}

fn check_lengths(pred: usize, truth: usize) -> Result<()> {
    if pred != truth {
        return Err(Error::DimensionMismatch {
            expected: truth,
            actual: pred,
        });
    }
    if truth == 0 {
        return Err(Error::Empty("predictions"));
    }
    Ok(())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Unweighted mean of per-class F1. A class that never occurs in either
/// vector scores 0 and still counts toward the mean.
pub fn macro_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    if let Some(&l) = pred.iter().chain(truth).find(|&&l| l >= n_classes) {
        return Err(Error::LabelOutOfRange {
            label: l,
            n_classes,
        });
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let total: f64 = (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / n_classes as f64)
}

/// Mann–Whitney AUC of `scores` for `positive[i]` against the rest, with tied
/// scores earning half credit. `None` when either side is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of midranks (1-based, doubled to stay integral) over positives.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank_x2 = (i + 1 + j + 1) as u128;
        let pos_in_group = order[i..=j].iter().filter(|&&k| positive[k]).count() as u128;
        rank_sum_x2 += midrank_x2 * pos_in_group;
        i = j + 1;
    }
    let (np, nn) = (n_pos as u128, n_neg as u128);
    let u_x2 = rank_sum_x2 - np * (np + 1);
    Some(u_x2 as f64 / (2 * np * nn) as f64)
}

/// AUC-ROC from per-sample output vectors.
///
/// Two classes: the class-1 output against the truth. More classes: the
/// unweighted mean of one-vs-rest AUCs over classes that have both positives
/// and negatives; other classes are skipped with a warning.
pub fn auc_roc(scores: &[Vec<f64>], truth: &[usize], n_classes: usize) -> Result<f64> {
    check_lengths(scores.len(), truth.len())?;
    if let Some(row) = scores.iter().find(|r| r.len() < n_classes) {
        return Err(Error::DimensionMismatch {
            expected: n_classes,
            actual: row.len(),
        });
    }
    let class_auc = |c: usize| {
        let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        let p: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        binary_auc(&s, &p)
    };
    if n_classes == 2 {
        return class_auc(1)
            .ok_or_else(|| Error::UndefinedMetric("AUC needs both classes in the truth".into()));
    }
    let mut aucs = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        match class_auc(c) {
            Some(a) => aucs.push(a),
            None => {
                log::warn!("AUC undefined for class {c} (no positives or no negatives); excluded")
            }
        }
    }
    if aucs.is_empty() {
        return Err(Error::UndefinedMetric(
            "no class has both positives and negatives".into(),
        ));
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}
