//! `randcloud`: run comparisons, cost studies and sweeps, and fetch datasets.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use randcloud_core::data::{convert_raw, dataset_spec, known_datasets};
use randcloud_core::experiment::{
    emit, run_experiment, sweep_hyperparams, time_methods, Format, Method, SeedSpec, Settings, SweepGrid,
};
use randcloud_core::nn::Loss;
use randcloud_core::BudgetSplit;

/// Exit status when the reports were written but at least one seed aborted.
const EXIT_ABORTED_SEEDS: u8 = 3;

#[derive(Parser)]
#[command(name = "randcloud", version, about = "Training-free topology search and pruning baselines")]
struct Cli {
    /// Log progress (repeat for more detail). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compare the cloud search with full training, magnitude and random pruning.
    Run(Common),
    /// Measure each method's wall-clock cost relative to full training.
    Time(Common),
    /// Run the cloud search over a grid of thresholds, cloud sizes and step sizes.
    Sweep(SweepArgs),
    /// Download raw UCI files and convert them to the cached CSV layout.
    FetchData(FetchArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file with any of the settings below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    /// Directory holding the cached CSV files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Count (`10` = seeds 0..10), list (`1,4,7`) or range (`5..15`).
    #[arg(long)]
    seeds: Option<SeedSpec>,
    /// Hidden widths of the initial topology, e.g. `32,16`.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Methods to run: cloud, full, magnitude, random.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    cloud_size: Option<usize>,
    /// Untrained training accuracy a candidate must exceed.
    #[arg(long)]
    theta: Option<f64>,
    /// Neurons removed per reduction step.
    #[arg(long)]
    n_elim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// squared_error or cross_entropy.
    #[arg(long, value_parser = parse_loss)]
    loss: Option<Loss>,
    #[arg(long)]
    threads: Option<usize>,
    /// sequential (E then E epochs) or halved (E/2 then E/2).
    #[arg(long)]
    budget_split: Option<BudgetSplit>,
    /// Repeats per method for `time`.
    #[arg(long)]
    timing_repeats: Option<usize>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Pool the distributed train and test files before splitting.
    #[arg(long)]
    pooled_split: bool,
    /// Output directory for the report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json, csv, md, all, or a comma-separated list.
    #[arg(long, default_value = "all")]
    format: String,
}

fn parse_loss(s: &str) -> std::result::Result<Loss, String> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "squared_error" | "mse" => Ok(Loss::SquaredError),
        "cross_entropy" | "ce" => Ok(Loss::CrossEntropy),
        other => Err(format!("unknown loss '{other}'")),
    }
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let file = match &self.config {
            Some(p) => Settings::from_toml_file(p)?,
            None => Settings::default(),
        };
        let cli = Settings {
            dataset: self.dataset.clone(),
            data_dir: self.data_dir.clone(),
            hidden: self.hidden.clone(),
            methods: self.methods.clone(),
            seeds: self.seeds.clone(),
            cloud_size: self.cloud_size,
            theta: self.theta,
            n_elim: self.n_elim,
            epochs: self.epochs,
            lr: self.lr,
            batch_size: self.batch_size,
            loss: self.loss,
            threads: self.threads,
            budget_split: self.budget_split,
            timing_repeats: self.timing_repeats,
            test_fraction: None,
            split_seed: self.split_seed,
            pooled_split: self.pooled_split.then_some(true),
            out: self.out.clone(),
        };
        Ok(file.overlay(&cli))
    }

    fn formats(&self) -> Result<Vec<Format>> {
        Ok(Format::parse_list(&self.format)?)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Threshold values; defaults to the configured threshold.
    #[arg(long, value_delimiter = ',')]
    thetas: Option<Vec<f64>>,
    /// Cloud sizes; defaults to the configured size.
    #[arg(long, value_delimiter = ',')]
    cloud_sizes: Option<Vec<usize>>,
    /// Elimination steps; defaults to the configured step.
    #[arg(long, value_delimiter = ',')]
    n_elims: Option<Vec<usize>>,
    /// Also train each selection and report its test accuracy.
    #[arg(long)]
    refine: bool,
}

#[derive(Args)]
struct FetchArgs {
    /// Datasets to fetch (`all` for every one).
    #[arg(long, value_delimiter = ',', default_value = "all")]
    dataset: Vec<String>,
    /// Where the converted CSV files go.
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Where raw files are downloaded to, or read from with --offline.
    #[arg(long)]
    raw_dir: Option<PathBuf>,
    /// Convert raw files already present in --raw-dir without downloading.
    #[arg(long)]
    offline: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Run(c) => run(&c),
        Cmd::Time(c) => time(&c),
        Cmd::Sweep(s) => sweep(&s),
        Cmd::FetchData(f) => fetch(&f),
    }
}

fn written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(c: &Common) -> Result<ExitCode> {
    let formats = c.formats()?;
    let cfg = c.settings()?.resolve()?;
    let report = run_experiment(&cfg)?;
    written(&emit(&report, &cfg.out, &formats)?);
    for a in &report.results.aggregates {
        println!(
            "{:<18} accuracy {:>5.1}% ± {:>4.1}  reduction {:>5.1}%  ({} seeds)",
            a.method.label(),
            100.0 * a.mean.accuracy,
            100.0 * a.std.accuracy,
            a.mean.reduction_percent,
            a.n
        );
    }
    let aborted = report.results.aborted_seeds();
    if !aborted.is_empty() {
        for s in report.results.seeds.iter().filter(|s| s.error.is_some()) {
            eprintln!("seed {} aborted: {}", s.seed, s.error.as_deref().unwrap_or_default());
        }
        return Ok(ExitCode::from(EXIT_ABORTED_SEEDS));
    }
    Ok(ExitCode::SUCCESS)
}

fn time(c: &Common) -> Result<ExitCode> {
    let formats = c.formats()?;
    let cfg = c.settings()?.resolve()?;
    let report = time_methods(&cfg)?;
    written(&emit(&report, &cfg.out, &formats)?);
    for m in &report.methods {
        println!("{:<18} {:>9.3} s  {:>5.2}x", m.method.label(), m.median_secs, m.ratio);
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(s: &SweepArgs) -> Result<ExitCode> {
    let formats = s.common.formats()?;
    let cfg = s.common.settings()?.resolve()?;
    let grid = SweepGrid {
        thetas: s.thetas.clone().unwrap_or_else(|| vec![cfg.threshold]),
        cloud_sizes: s.cloud_sizes.clone().unwrap_or_else(|| vec![cfg.cloud_size]),
        n_elims: s.n_elims.clone().unwrap_or_else(|| vec![cfg.n_elim]),
    };
    let report = sweep_hyperparams(&cfg, &grid, s.refine)?;
    written(&emit(&report, &cfg.out, &formats)?);
    let changed = report.cells.iter().filter(|c| c.changed).count();
    println!("{} cells, {changed} with a different selection than the first cell", report.cells.len());
    Ok(ExitCode::SUCCESS)
}

fn fetch(f: &FetchArgs) -> Result<ExitCode> {
    let names: Vec<&'static str> = if f.dataset.iter().any(|d| d == "all") {
        known_datasets().iter().map(|s| s.name).collect()
    } else {
        f.dataset
            .iter()
            .map(|d| dataset_spec(d).map(|s| s.name))
            .collect::<std::result::Result<_, _>>()?
    };
    let raw_dir = f.raw_dir.clone().unwrap_or_else(|| f.data_dir.join("raw"));
    std::fs::create_dir_all(&raw_dir).with_context(|| format!("creating {}", raw_dir.display()))?;
    for name in names {
        let spec = dataset_spec(name)?;
        if !f.offline {
            for (i, (file, _)) in spec.raw_files.iter().enumerate() {
                download(&spec.url(i), &raw_dir.join(file))?;
            }
        }
        let files = convert_raw(name, &raw_dir, &f.data_dir)?;
        info!("{name}: converted");
        written(&files);
    }
    Ok(ExitCode::SUCCESS)
}

/// Downloads with the system `curl`, keeping the library free of network code.
fn download(url: &str, dest: &Path) -> Result<()> {
    println!("fetching {url}");
    let status = Command::new("curl")
        .args(["--fail", "--location", "--silent", "--show-error", "--max-time", "300", "--output"])
        .arg(dest)
        .arg(url)
        .status()
        .context("running curl (is it installed?)")?;
    if !status.success() {
        bail!("download of {url} failed ({status}); files can be placed in the raw directory by hand and converted with --offline");
    }
    Ok(())
}
