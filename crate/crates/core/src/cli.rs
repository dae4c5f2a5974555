//! Command-line front end: `simulate`, `fit`, `evaluate` and `replicate-synthetic`.
//!
//! Exit codes: 0 on success, 1 for usage, parse and validation errors, 2 when a
//! numerical step fails (infeasible likelihood, solver failure, event cap).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiments::{
    run_incentivization, run_recovery, scenario_curves, IncentiveConfig, RecoveryConfig,
};
use crate::inference::{cross_validate_beta, fit_all, FitConfig, FitReport, DEFAULT_HOLDOUT};
use crate::io::{read_event_log, read_params, write_csv, write_event_log, write_params, CsvField};
use crate::metrics::{avg_pred_loglik, compare_models, param_errors, CurveSeries, MetricsReport};
use crate::model::{EventLog, MarkModel};
use crate::simulation::{simulate, SimConfig};

#[derive(Debug, Parser)]
#[command(name = "cascades", version, about = "Simulate and fit correlated cascades")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an event log from a parameter file.
    Simulate(SimulateArgs),
    /// Fit parameters to an event log.
    Fit(FitArgs),
    /// Score a parameter set on held-out events.
    Evaluate(EvaluateArgs),
    /// Regenerate the synthetic experiment data as CSV.
    ReplicateSynthetic(ReplicateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, conflicts_with_all = ["beta_grid", "linear"])]
    pub beta: Option<f64>,
    /// Comma-separated candidates chosen by held-out likelihood.
    #[arg(long, value_delimiter = ',', conflicts_with = "linear")]
    pub beta_grid: Option<Vec<f64>>,
    /// Fit the independent (linear mark) model.
    #[arg(long)]
    pub linear: bool,
    /// Fraction of the time window held out when choosing beta.
    #[arg(long, default_value_t = DEFAULT_HOLDOUT)]
    pub holdout: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-user report CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Bin width for intensity curves; defaults to a hundredth of the test window.
    #[arg(long)]
    pub bins: Option<f64>,
    /// Logs to compare against the test log; defaults to one simulated from the
    /// parameters over the test window.
    #[arg(long)]
    pub generated: Vec<PathBuf>,
    /// Ground-truth parameters, adds MSE and MAE rows.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Recovery,
    Incentivization,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long, default_value_t = 2016)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Scenario horizon (incentivization).
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub bins: Option<f64>,
    /// Smaller recovery run: number of users.
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub train_events: Option<usize>,
    #[arg(long)]
    pub test_events: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::ReplicateSynthetic(a) => cmd_replicate(a),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let params = read_params(&args.params)?;
    let log = simulate(&params, &SimConfig::new(args.horizon, args.seed))?;
    write_event_log(&args.out, &log)?;
    let counts: Vec<String> = log.product_counts().iter().map(usize::to_string).collect();
    println!("events: {}", log.len());
    println!("per product: {}", counts.join(","));
    Ok(())
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let log = read_event_log(&args.events)?;
    let mut config = FitConfig::default();
    if args.linear {
        config.mark = MarkModel::Linear;
    } else if let Some(grid) = &args.beta_grid {
        let selection = cross_validate_beta(&log, grid, args.holdout, &config)?;
        for (beta, score) in &selection.scores {
            log::info!("beta {beta}: held-out nll per event {score}");
        }
        println!("selected beta: {}", selection.beta);
        config.mark = MarkModel::SoftMax { beta: selection.beta };
    } else {
        config.mark = MarkModel::SoftMax {
            beta: args.beta.unwrap_or(1.0),
        };
    }
    let (params, report) = fit_all(&log, &config)?;
    if !report.all_converged() {
        log::warn!(
            "{} of {} users did not meet the inner tolerance",
            report.users.len() - report.n_converged,
            report.users.len()
        );
    }
    write_params(&args.out, &params)?;
    if let Some(path) = &args.report {
        write_fit_report(path, &report, &config.mark)?;
    }
    println!(
        "total nll: {}  converged: {}/{}  time: {:.2}s",
        report.total_nll,
        report.n_converged,
        report.users.len(),
        report.wall_time_secs
    );
    Ok(())
}

fn mark_name(mark: &MarkModel) -> String {
    match mark {
        MarkModel::Linear => "linear".into(),
        MarkModel::SoftMax { beta } => format!("softmax({beta})"),
    }
}

pub fn write_fit_report(path: &Path, report: &FitReport, mark: &MarkModel) -> Result<()> {
    let rows: Vec<Vec<CsvField>> = report
        .users
        .iter()
        .map(|u| {
            vec![
                u.user.into(),
                u.n_events.into(),
                CsvField::Text(u.converged.to_string()),
                u.final_nll.into(),
                u.outer_iterations.into(),
                u.inner_iterations.into(),
                u.projected_grad_norm.into(),
                mark_name(mark).into(),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "user",
            "n_events",
            "converged",
            "final_nll",
            "outer_iterations",
            "inner_iterations",
            "projected_grad_norm",
            "mark",
        ],
        &rows,
    )
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let train = read_event_log(&args.train)?;
    let test = read_event_log(&args.test)?;
    let params = read_params(&args.params)?;
    check_windows(&train, &test)?;
    let bins = args.bins.unwrap_or((test.horizon() - train.horizon()) / 100.0);

    let generated: Vec<(String, EventLog)> = if args.generated.is_empty() {
        let sim = simulate(
            &params,
            &SimConfig::new(test.horizon(), args.seed).with_history(train.clone()),
        )?;
        vec![("model".to_string(), sim)]
    } else {
        args.generated
            .iter()
            .map(|p| {
                let label = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                Ok((label, read_event_log(p)?))
            })
            .collect::<Result<_>>()?
    };
    let errors = match &args.truth {
        Some(p) => Some(param_errors(&params, &read_params(p)?)?),
        None => None,
    };
    let report = MetricsReport {
        avg_pred_loglik: if test.is_empty() {
            None
        } else {
            Some(avg_pred_loglik(&train, &test, &params)?)
        },
        errors,
        comparisons: compare_models(&test, &generated, train.horizon(), bins)?,
    };
    let rows: Vec<Vec<CsvField>> = report
        .rows()
        .into_iter()
        .map(|r| vec![r.metric.into(), r.product.into(), r.value.into()])
        .collect();
    write_csv(&args.out, &["metric", "product", "value"], &rows)?;
    println!("wrote {} metric rows", rows.len());
    Ok(())
}

/// The test log must continue the training log: same dimensions and every test
/// event inside `[train.horizon, test.horizon]`.
pub fn check_windows(train: &EventLog, test: &EventLog) -> Result<()> {
    if train.n_users() != test.n_users() || train.n_products() != test.n_products() {
        return Err(Error::ShapeMismatch(format!(
            "train is {}x{}, test is {}x{}",
            train.n_users(),
            train.n_products(),
            test.n_users(),
            test.n_products()
        )));
    }
    if test.horizon() <= train.horizon() {
        return Err(Error::InvalidLog(format!(
            "test horizon {} does not extend the training horizon {}",
            test.horizon(),
            train.horizon()
        )));
    }
    if let Some(e) = test.events().first().filter(|e| e.time < train.horizon()) {
        return Err(Error::InvalidLog(format!(
            "test event at {} precedes the training horizon {}",
            e.time,
            train.horizon()
        )));
    }
    Ok(())
}

pub fn cmd_replicate(args: &ReplicateArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    match args.figure {
        Figure::Recovery => {
            let mut config = RecoveryConfig {
                seed: args.seed,
                ..RecoveryConfig::default()
            };
            if let Some(n) = args.users {
                config.n_users = n;
            }
            if let Some(k) = args.train_events {
                config.train_events = k;
            }
            if let Some(k) = args.test_events {
                config.test_events = k;
            }
            let outcome = run_recovery(&config)?;
            let rows: Vec<Vec<CsvField>> = outcome
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.fraction.into(),
                        r.n_train_events.into(),
                        r.events_per_user.into(),
                        r.errors.mse.into(),
                        r.errors.mae.into(),
                        r.avg_pred_loglik.into(),
                    ]
                })
                .collect();
            let path = args.out.join("recovery.csv");
            write_csv(
                &path,
                &["fraction", "n_train_events", "events_per_user", "mse", "mae", "avg_pred_loglik"],
                &rows,
            )?;
            println!("wrote {}", path.display());
        }
        Figure::Incentivization => {
            let mut config = IncentiveConfig {
                seed: args.seed,
                ..IncentiveConfig::default()
            };
            if let Some(h) = args.horizon {
                config.horizon = h;
            }
            if let Some(b) = args.bins {
                config.bin_width = b;
            }
            let outcome = run_incentivization(&config)?;
            for run in &outcome.runs {
                let (intensity, shares) = scenario_curves(&run.log, config.bin_width)?;
                let path = args.out.join(format!("intensity_{}.csv", run.label));
                write_curves(&path, &intensity)?;
                let path = args.out.join(format!("market_share_{}.csv", run.label));
                write_curves(&path, &shares)?;
            }
            println!("wrote {} model runs to {}", outcome.runs.len(), args.out.display());
        }
    }
    Ok(())
}

/// Writes series sharing one grid as `time,<label>...` columns.
pub fn write_curves(path: &Path, series: &[CurveSeries]) -> Result<()> {
    let Some(first) = series.first() else {
        return Err(Error::EmptyInput("no series to write"));
    };
    if series.iter().any(|s| s.grid != first.grid) {
        return Err(Error::ShapeMismatch("series do not share a grid".into()));
    }
    let mut header = vec!["time"];
    header.extend(series.iter().map(|s| s.label.as_str()));
    let rows: Vec<Vec<CsvField>> = (0..first.len())
        .map(|i| {
            let mut row = vec![first.grid[i].into()];
            row.extend(series.iter().map(|s| CsvField::from(s.values[i])));
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}
