//! Paired Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Differences with magnitude at or below this are treated as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Largest effective sample size that gets an exact p-value.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided, in `(0, 1]`.
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method_note: String,
}

/// Average ranks of `values` (1-based), doubled so ties stay integral.
pub fn doubled_average_ranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on `a - b`.
///
/// Zero differences are dropped; if none remain the p-value is 1. Up to
/// [`EXACT_LIMIT`] remaining pairs the p-value is exact under the realized
/// (possibly tied) ranks, computed by counting sign assignments. Beyond that a
/// tie-corrected normal approximation with continuity correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<PairedTestResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "Wilcoxon inputs must be finite".into(),
        ));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| d.abs() > ZERO_TOLERANCE)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(PairedTestResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            n_effective: 0,
            method_note: "all differences zero; p = 1".into(),
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_average_ranks(&magnitudes);
    let plus_x2: u64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let total_x2: u64 = ranks.iter().sum();
    let minus_x2 = total_x2 - plus_x2;
    let stat_x2 = plus_x2.min(minus_x2);

    let (p_value, method_note) = if n <= EXACT_LIMIT {
        (
            exact_two_sided(&ranks, stat_x2),
            format!("exact over 2^{n} sign assignments, zero differences dropped"),
        )
    } else {
        (
            normal_two_sided(&ranks, stat_x2),
            format!("normal approximation (n = {n} > {EXACT_LIMIT}), tie-corrected, zero differences dropped"),
        )
    };
    Ok(PairedTestResult {
        statistic: stat_x2 as f64 / 2.0,
        w_plus: plus_x2 as f64 / 2.0,
        w_minus: minus_x2 as f64 / 2.0,
        p_value,
        n_effective: n,
        method_note,
    })
}

/// `P(min(W+, W-) <= observed)` under random signs, by dynamic programming
/// over the distribution of the doubled positive-rank sum.
fn exact_two_sided(ranks_x2: &[u64], stat_x2: u64) -> f64 {
    let total: u64 = ranks_x2.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks_x2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks_x2.len() as i32);
    let tail: f64 = counts
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as u64).min(total - s as u64) <= stat_x2)
        .map(|(_, c)| c)
        .sum();
    (tail / all).min(1.0)
}

fn normal_two_sided(ranks_x2: &[u64], stat_x2: u64) -> f64 {
    let ranks: Vec<f64> = ranks_x2.iter().map(|&r| r as f64 / 2.0).collect();
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let var = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    if var == 0.0 {
        return 1.0;
    }
    let z = ((stat_x2 as f64 / 2.0 - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * upper_normal_tail(z)).min(1.0)
}

/// `P(Z > z)` for a standard normal, via `erfc` (Numerical Recipes `erfcc`,
/// relative error below 1.2e-7).
fn upper_normal_tail(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.5 * x.abs());
    let poly = -x * x - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let erfc = t * poly.exp();
    let erfc = if x >= 0.0 { erfc } else { 2.0 - erfc };
    erfc / 2.0
}
