//! Batch front end for the sparsezest experiments.
//!
//! Exit codes: 0 on success, 2 for configuration or I/O errors, 3 for
//! numeric failures.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sparsezest::dantzig::{cross_validate_lambda, default_lambda_grid, CvOptions, DantzigOptions};
use sparsezest::diagnostics::{estimate_f_infinity, f_infinity_grid, GRID_ORACLE_MAX_DIM};
use sparsezest::harness::{
    choose_lambda, design_for, emit_histogram, run_case, run_hawkes_support, simulate_series,
    true_parameters, write_records_csv, CaseConfig, CaseId, LambdaMode, SCHEMA_VERSION,
};
use sparsezest::procsim::SeriesKind;
use sparsezest::twostep::{two_step_fit, TwoStepOptions};
use sparsezest::{Error, Matrix, Result, SeriesSample};

#[derive(Parser)]
#[command(name = "sparsezest", version, about = "Two-step Dantzig estimation for sparse process models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Case1,
    Case2,
    Case3,
    Case4,
    Ou,
    Hawkes,
}

impl From<Case> for CaseId {
    fn from(c: Case) -> Self {
        match c {
            Case::Case1 => CaseId::Case1,
            Case::Case2 => CaseId::Case2,
            Case::Case3 => CaseId::Case3,
            Case::Case4 => CaseId::Case4,
            Case::Ou => CaseId::Ou,
            Case::Hawkes => CaseId::Hawkes,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON). Overrides --case.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario used when no config is given.
    #[arg(long, value_enum, default_value = "case1")]
    case: Case,
    /// Sample size for built-in scenarios.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Fixed lambda instead of the configured mode.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one series and write it as CSV.
    Simulate(Common),
    /// Two-step fit on one simulated series (or --series) and print the JSON.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Fit this series CSV instead of simulating.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Cross-validate lambda on one simulated series (or --series).
    Cv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Replicated experiment; writes the JSON report.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Histogram CSV of the projected statistic over non-failed reps.
        #[arg(long)]
        hist: Option<PathBuf>,
        /// Per-rep records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compatibility factor of a matrix over a support cone.
    Finfty {
        /// JSON with `matrix` (rows), `support`, optional `samples`.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hawkes support-length experiment.
    HawkesSupport {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(c: &Common, default_case: Option<CaseId>) -> Result<CaseConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            CaseConfig::from_json(&text)?
        }
        None => CaseConfig::builtin(default_case.unwrap_or(c.case.into()), c.n)?,
    };
    if let Some(s) = c.seed {
        cfg.base_seed = s;
    }
    if let Some(r) = c.reps {
        cfg.reps = r;
    }
    if let Some(l) = c.lambda {
        cfg.lambda_mode = LambdaMode::Fixed { value: l };
    }
    if let Some(t) = c.tau {
        cfg.tau = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn series_for(cfg: &CaseConfig, path: &Option<PathBuf>) -> Result<SeriesSample> {
    match path {
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let (kind, delta) = match &cfg.model {
                sparsezest::harness::ModelParams::Ou { spec, .. } => (SeriesKind::Reals, Some(spec.delta)),
                _ => (SeriesKind::Counts, None),
            };
            SeriesSample::read_csv(f, kind, delta)
        }
        None => simulate_series(cfg, cfg.base_seed),
    }
}

fn read_finfty(path: &Path) -> Result<(Matrix, Vec<usize>, usize)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<Vec<f64>> = serde_json::from_value(v["matrix"].clone())
        .map_err(|e| Error::Config(format!("matrix: {e}")))?;
    let support: Vec<usize> = serde_json::from_value(v["support"].clone())
        .map_err(|e| Error::Config(format!("support: {e}")))?;
    let samples = v["samples"].as_u64().unwrap_or(20_000) as usize;
    let m = Matrix::from_rows(&rows).map_err(|e| Error::Config(e.to_string()))?;
    Ok((m, support, samples))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load_config(&c, None)?;
            let s = simulate_series(&cfg, cfg.base_seed)?;
            s.write_csv(sink(&c.out)?)
        }
        Command::Fit { common, series } => {
            let cfg = load_config(&common, None)?;
            let s = series_for(&cfg, &series)?;
            let (design, _) = design_for(&cfg, &s)?;
            let lambda = choose_lambda(&cfg, &design)?;
            let (_, support, _) = true_parameters(&cfg.model);
            let opts = TwoStepOptions {
                mode: cfg.score_mode,
                ..TwoStepOptions::default()
            };
            let fit = two_step_fit(&design, lambda, cfg.tau, Some(&support), &opts)?;
            let report = json!({
                "schema": SCHEMA_VERSION,
                "lambda": lambda,
                "tau": cfg.tau,
                "first_step": fit.first_step.export(),
                "theta_first": fit.theta_first,
                "two_step": fit.export(),
                "empty_model": fit.empty_model,
            });
            write_json(&report, &common.out)
        }
        Command::Cv { common, series } => {
            let cfg = load_config(&common, None)?;
            let s = series_for(&cfg, &series)?;
            let (design, _) = design_for(&cfg, &s)?;
            let (grid, folds) = match &cfg.lambda_mode {
                LambdaMode::Cv { grid: Some(g), folds } => (g.clone(), *folds),
                LambdaMode::Cv { grid: None, folds } => (default_lambda_grid(&design, cfg.score_mode)?, *folds),
                LambdaMode::Fixed { .. } => (default_lambda_grid(&design, cfg.score_mode)?, 5),
            };
            let opts = CvOptions {
                folds,
                mode: cfg.score_mode,
                dantzig: DantzigOptions::default(),
            };
            let r = cross_validate_lambda(&design, &grid, &opts)?;
            write_json(&json!({ "schema": SCHEMA_VERSION, "cv": r }), &common.out)
        }
        Command::Experiment { common, hist, csv } => {
            let cfg = load_config(&common, None)?;
            let report = run_case(&cfg, common.jobs)?;
            if let Some(path) = &hist {
                let stats: Vec<f64> = report.records.iter().filter(|r| !r.failed).map(|r| r.proj_stat).collect();
                emit_histogram(&stats, cfg.hist_bins, path)?;
            }
            if let Some(path) = &csv {
                write_records_csv(&report.records, BufWriter::new(File::create(path)?))?;
            }
            write_json(&report, &common.out)
        }
        Command::Finfty { config, seed, out } => {
            let (m, support, samples) = read_finfty(&config)?;
            let sampled = estimate_f_infinity(&m, &support, samples, seed)?;
            let grid = if m.rows() <= GRID_ORACLE_MAX_DIM {
                Some(f_infinity_grid(&m, &support, 200)?)
            } else {
                None
            };
            write_json(
                &json!({ "schema": SCHEMA_VERSION, "sampled": sampled, "grid": grid }),
                &out,
            )
        }
        Command::HawkesSupport { common } => {
            let cfg = load_config(&common, Some(CaseId::Hawkes))?;
            let report = run_hawkes_support(&cfg, common.jobs)?;
            write_json(&report, &common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
