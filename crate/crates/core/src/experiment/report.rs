//! Serialization of experiment, timing and sweep reports to JSON, CSV and
//! Markdown. JSON is the complete machine-readable record; the other two are
//! views of it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::config::Method;
use crate::experiment::run::ExperimentReport;
use crate::experiment::sweep::SweepReport;
use crate::experiment::timing::TimingReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Markdown];

    pub fn file_name(self) -> &'static str {
        match self {
            Format::Json => "report.json",
            Format::Csv => "report.csv",
            Format::Markdown => "report.md",
        }
    }

    /// `json`, `csv`, `md`/`markdown`, `all`, or a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Format>> {
        let mut out = Vec::new();
        for part in s.split(',') {
            match part.trim().to_ascii_lowercase().as_str() {
                "json" => out.push(Format::Json),
                "csv" => out.push(Format::Csv),
                "md" | "markdown" => out.push(Format::Markdown),
                "all" => out.extend(Format::ALL),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown output format '{other}'"
                    )))
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// A report that can be written in every format.
pub trait Render: Serialize {
    fn csv(&self) -> String;
    fn markdown(&self) -> String;

    fn json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Csv => self.csv(),
            Format::Markdown => self.markdown(),
        }
    }
}

/// Writes `report.<ext>` for each requested format into `dir`.
pub fn emit(report: &impl Render, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(f.file_name());
            std::fs::write(&path, report.render(f)).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

const SEED_HEADER: [&str; 10] = [
    "dataset",
    "seed",
    "method",
    "repeat",
    "status",
    "accuracy",
    "macro_f1",
    "auc_roc",
    "reduction_percent",
    "topology",
];

impl Render for ExperimentReport {
    /// One row per (seed, method), plus one per random-pruning repeat.
    fn csv(&self) -> String {
        let r = &self.results;
        let mut rows = Vec::new();
        for s in &r.seeds {
            for &method in &r.config.methods {
                let base = |repeat: String, status: &str| {
                    vec![
                        r.config.dataset.clone(),
                        s.seed.to_string(),
                        method.name().to_string(),
                        repeat,
                        status.to_string(),
                    ]
                };
                match s.get(method) {
                    Some(m) => {
                        let metrics = |x: &crate::metrics::MetricSet| {
                            vec![
                                f6(x.accuracy),
                                f6(x.macro_f1),
                                f6(x.auc_roc),
                                f6(x.reduction_percent),
                                m.topology.to_string(),
                            ]
                        };
                        let mut row = base(
                            String::new(),
                            if m.repeats.is_empty() { "ok" } else { "mean" },
                        );
                        row.extend(metrics(&m.metrics));
                        rows.push(row);
                        for (i, rep) in m.repeats.iter().enumerate() {
                            let mut row = base(i.to_string(), "ok");
                            row.extend(metrics(rep));
                            rows.push(row);
                        }
                    }
                    None => {
                        let mut row = base(String::new(), "aborted");
                        row.extend(std::iter::repeat_n(String::new(), 5));
                        rows.push(row);
                    }
                }
            }
        }
        csv_text(&SEED_HEADER, rows)
    }

    fn markdown(&self) -> String {
        let r = &self.results;
        let c = &r.config;
        let mut s = String::new();
        let _ = writeln!(s, "# {}\n", c.dataset);
        let _ = writeln!(
            s,
            "Initial topology {} · {} train / {} test rows · N = {}, θ = {}, n_elim = {} · E = {}, η = {} · budget {:?} · seeds {:?}\n",
            c.topology, r.train_rows, r.test_rows, c.cloud_size, c.threshold, c.n_elim, c.train.epochs,
            c.train.learning_rate, c.budget_split, c.seeds
        );
        let _ = writeln!(s, "Data: {}\n", r.provenance);

        let _ = writeln!(s, "## Test metrics (mean ± sample std over seeds)\n");
        let _ = writeln!(
            s,
            "| Method | Accuracy (%) | Macro-F1 | AUC-ROC | Reduction (%) | Seeds |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for a in &r.aggregates {
            let _ = writeln!(
                s,
                "| {} | {} ± {} | {:.3} ± {:.3} | {:.3} ± {:.3} | {:.1} ± {:.1} | {} |",
                a.method.label(),
                pct(a.mean.accuracy),
                pct(a.std.accuracy),
                a.mean.macro_f1,
                a.std.macro_f1,
                a.mean.auc_roc,
                a.std.auc_roc,
                a.mean.reduction_percent,
                a.std.reduction_percent,
                a.n
            );
        }

        if !r.comparisons.is_empty() {
            let _ = writeln!(
                s,
                "\n## Paired tests: cloud vs baseline (Wilcoxon signed-rank, two-sided)\n"
            );
            let _ = writeln!(
                s,
                "| Baseline | Metric | Cloud mean | Baseline mean | W+ | W− | n | p |"
            );
            let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
            for cmp in &r.comparisons {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.4} | {:.4} | {} | {} | {} | {:.3} |",
                    cmp.baseline.label(),
                    cmp.metric,
                    cmp.cloud_mean,
                    cmp.baseline_mean,
                    cmp.test.w_plus,
                    cmp.test.w_minus,
                    cmp.test.n_effective,
                    cmp.test.p_value
                );
            }
            if let Some(cmp) = r.comparisons.first() {
                let _ = writeln!(s, "\np-values: {}.", cmp.test.method_note);
            }
        }

        let _ = writeln!(s, "\n## Per-seed test accuracy (%)\n");
        let mut header = String::from("| Seed | Selected topology | Member / step |");
        let mut rule = String::from("|---|---|---|");
        for m in &c.methods {
            let _ = write!(header, " {} |", m.label());
            rule.push_str("---|");
        }
        let _ = writeln!(s, "{header}\n{rule}");
        for seed in &r.seeds {
            let (topo, member) = match &seed.cloud {
                Some(cl) => (
                    cl.topology.to_string(),
                    format!("{} / {}", cl.network_index, cl.step_number),
                ),
                None => ("-".into(), "-".into()),
            };
            let mut line = format!("| {} | {} | {} |", seed.seed, topo, member);
            for &m in &c.methods {
                let cell = seed
                    .get(m)
                    .map_or_else(|| "aborted".to_string(), |x| pct(x.metrics.accuracy));
                let _ = write!(line, " {cell} |");
            }
            let _ = writeln!(s, "{line}");
        }
        for seed in r.seeds.iter().filter(|x| x.error.is_some()) {
            let _ = writeln!(
                s,
                "\nSeed {} aborted: {}",
                seed.seed,
                seed.error.as_deref().unwrap_or("")
            );
        }

        let _ = writeln!(
            s,
            "\n## Wall-clock (not part of the reproducible results)\n"
        );
        let _ = writeln!(s, "Total {:.2} s.\n", self.timings.total_secs);
        let _ = writeln!(s, "| Method | Median seconds per seed |");
        let _ = writeln!(s, "|---|---|");
        for m in Method::ALL {
            let v: Vec<f64> = self
                .timings
                .per_method
                .iter()
                .filter(|t| t.method == m)
                .map(|t| t.secs)
                .collect();
            if !v.is_empty() {
                let _ = writeln!(
                    s,
                    "| {} | {:.3} |",
                    m.label(),
                    crate::experiment::timing::median(&v)
                );
            }
        }
        s
    }
}

impl Render for TimingReport {
    fn csv(&self) -> String {
        let rows = self
            .methods
            .iter()
            .map(|m| {
                vec![
                    self.dataset.clone(),
                    m.method.name().to_string(),
                    self.threads.to_string(),
                    self.repeats.to_string(),
                    f6(m.median_secs),
                    f6(m.ratio),
                    m.samples_secs
                        .iter()
                        .map(|x| f6(*x))
                        .collect::<Vec<_>>()
                        .join(";"),
                ]
            })
            .collect();
        csv_text(
            &[
                "dataset",
                "method",
                "threads",
                "repeats",
                "median_secs",
                "ratio_vs_full",
                "samples_secs",
            ],
            rows,
        )
    }

    fn markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Cost study: {}\n", self.dataset);
        let _ = writeln!(
            s,
            "{} train rows · {} → {} · E = {} · seed {} · median of {} runs, {} threads\n",
            self.train_rows,
            self.topology,
            self.target_topology,
            self.epochs,
            self.seed,
            self.repeats,
            self.threads
        );
        let _ = writeln!(s, "| Method | Median (s) | Ratio vs full training |");
        let _ = writeln!(s, "|---|---|---|");
        for m in &self.methods {
            let _ = writeln!(
                s,
                "| {} | {:.3} | {:.2}× |",
                m.method.label(),
                m.median_secs,
                m.ratio
            );
        }
        let _ = writeln!(
            s,
            "\nCloud exploration {:.3} s, refinement {:.3} s; exploration is {:.0}% of the cloud's time.",
            self.exploration_median_secs,
            self.refinement_median_secs,
            100.0 * self.exploration_share
        );
        s
    }
}

impl Render for SweepReport {
    fn csv(&self) -> String {
        let rows = self
            .cells
            .iter()
            .map(|c| {
                let sel = c.selection.as_ref();
                vec![
                    self.dataset.clone(),
                    c.seed.to_string(),
                    c.theta.to_string(),
                    c.cloud_size.to_string(),
                    c.n_elim.to_string(),
                    sel.map_or(String::new(), |s| s.network_index.to_string()),
                    sel.map_or(String::new(), |s| s.step_number.to_string()),
                    sel.map_or(String::new(), |s| s.topology.to_string()),
                    sel.map_or(String::new(), |s| s.parameter_count.to_string()),
                    sel.map_or(String::new(), |s| f6(s.untrained_train_accuracy)),
                    c.test_accuracy.map_or(String::new(), f6),
                    c.changed.to_string(),
                ]
            })
            .collect();
        csv_text(
            &[
                "dataset",
                "seed",
                "theta",
                "cloud_size",
                "n_elim",
                "network_index",
                "step_number",
                "topology",
                "parameters",
                "untrained_train_accuracy",
                "test_accuracy",
                "changed",
            ],
            rows,
        )
    }

    fn markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Sweep: {} from {}\n", self.dataset, self.topology);
        if self.cells.is_empty() {
            let _ = writeln!(s, "Empty grid.");
            return s;
        }
        let _ = writeln!(s, "| Seed | θ | N | n_elim | Selected | Member / step | Params | Train acc (untrained) | Test acc | Changed |");
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|---|");
        for c in &self.cells {
            let (topo, member, params, acc) = match &c.selection {
                Some(x) => (
                    x.topology.to_string(),
                    format!("{} / {}", x.network_index, x.step_number),
                    x.parameter_count.to_string(),
                    pct(x.untrained_train_accuracy),
                ),
                None => ("none".into(), "-".into(), "-".into(), "-".into()),
            };
            let test = c.test_accuracy.map_or("-".to_string(), pct);
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                c.seed,
                c.theta,
                c.cloud_size,
                c.n_elim,
                topo,
                member,
                params,
                acc,
                test,
                if c.changed { "yes" } else { "" }
            );
        }
        s
    }
}
