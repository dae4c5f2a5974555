//! Synthetic experiment pipelines: parameter recovery as training data grows, and
//! the incentivization scenario comparing independent and correlated cascades.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{fit_all, FitConfig};
use crate::metrics::{avg_pred_loglik, param_errors, CurveSeries, ParamErrors};
use crate::model::{EventLog, MarkModel, ModelParams};
use crate::simulation::{binned_intensity, market_share, simulate, simulate_count, SimConfig};

/// Dense random parameters: `mu ~ U(0, mu_max)` and `alpha ~ U(0, alpha_max)`.
pub fn random_params<R: Rng>(
    n_users: usize,
    n_products: usize,
    mu_max: f64,
    alpha_max: f64,
    mark: MarkModel,
    rng: &mut R,
) -> Result<ModelParams> {
    let mu = (0..n_users * n_products).map(|_| rng.random::<f64>() * mu_max).collect();
    let alpha = (0..n_users * n_users).map(|_| rng.random::<f64>() * alpha_max).collect();
    ModelParams::new(n_users, n_products, mu, alpha, mark)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub n_users: usize,
    pub n_products: usize,
    pub mu_max: f64,
    pub alpha_max: f64,
    pub beta: f64,
    pub train_events: usize,
    pub test_events: usize,
    /// Training fractions `1/k, 2/k, ..., 1`.
    pub n_fractions: usize,
    pub seed: u64,
    pub fit: FitConfig,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            n_users: 50,
            n_products: 5,
            mu_max: 0.1,
            alpha_max: 0.01,
            beta: 1.0,
            train_events: 20_000,
            test_events: 2_000,
            n_fractions: 10,
            seed: 2016,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub fraction: f64,
    pub n_train_events: usize,
    pub events_per_user: f64,
    pub errors: ParamErrors,
    pub avg_pred_loglik: f64,
    pub n_converged: usize,
    pub fit_secs: f64,
}

#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    pub truth: ModelParams,
    pub train: EventLog,
    pub test: EventLog,
    pub rows: Vec<RecoveryRow>,
}

/// Simulates a training and a test stream from random parameters, then fits on
/// growing prefixes of the training stream and scores each fit.
pub fn run_recovery(config: &RecoveryConfig) -> Result<RecoveryOutcome> {
    if config.n_fractions == 0 || config.train_events == 0 || config.test_events == 0 {
        return Err(Error::InvalidConfig("recovery needs fractions, train and test events".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mark = MarkModel::SoftMax { beta: config.beta };
    let truth = random_params(
        config.n_users,
        config.n_products,
        config.mu_max,
        config.alpha_max,
        mark,
        &mut rng,
    )?;
    let total = config.train_events + config.test_events;
    let all = simulate_count(&truth, rng.random(), total, None)?;
    let train = all.prefix(config.train_events);
    let test = EventLog::new(
        all.n_users(),
        all.n_products(),
        all.horizon(),
        all.events()[config.train_events..].to_vec(),
    )?;

    let fit = FitConfig {
        mark,
        ..config.fit.clone()
    };
    let mut rows = Vec::with_capacity(config.n_fractions);
    for k in 1..=config.n_fractions {
        let fraction = k as f64 / config.n_fractions as f64;
        let n_train = ((fraction * config.train_events as f64).round() as usize).max(1);
        let subset = train.prefix(n_train);
        let (est, report) = fit_all(&subset, &fit)?;
        let errors = param_errors(&est, &truth)?;
        let score = avg_pred_loglik(&train, &test, &est).unwrap_or(f64::INFINITY);
        log::info!(
            "fraction {fraction:.1}: {n_train} events, mse {:.3e}, mae {:.3}, avg pred nll {score:.4}, {:.1}s",
            errors.mse,
            errors.mae,
            report.wall_time_secs
        );
        rows.push(RecoveryRow {
            fraction,
            n_train_events: n_train,
            events_per_user: n_train as f64 / config.n_users as f64,
            errors,
            avg_pred_loglik: score,
            n_converged: report.n_converged,
            fit_secs: report.wall_time_secs,
        });
    }
    Ok(RecoveryOutcome {
        truth,
        train,
        test,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncentiveConfig {
    pub n_users: usize,
    /// Baseline centre per product; users get `U(c - noise, c + noise)`.
    pub mu_centers: Vec<f64>,
    pub mu_noise: f64,
    pub alpha_max: f64,
    /// Probability that a directed influence edge exists.
    pub edge_prob: f64,
    pub switch_time: f64,
    pub horizon: f64,
    pub boosted_product: usize,
    pub boost_factor: f64,
    /// Soft-max models run after the switch, next to the linear one.
    pub betas: Vec<f64>,
    pub bin_width: f64,
    pub seed: u64,
}

impl Default for IncentiveConfig {
    fn default() -> Self {
        Self {
            n_users: 50,
            mu_centers: vec![0.2, 0.5, 0.3],
            mu_noise: 0.02,
            alpha_max: 0.1,
            edge_prob: 0.04,
            switch_time: 100.0,
            horizon: 200.0,
            boosted_product: 2,
            boost_factor: 2.0,
            betas: vec![0.1, 1.0, 100.0],
            bin_width: 2.0,
            seed: 2016,
        }
    }
}

/// Parameters for the scenario: noisy per-product baselines and a sparse random
/// influence network.
pub fn incentive_params<R: Rng>(config: &IncentiveConfig, rng: &mut R) -> Result<ModelParams> {
    let n = config.n_users;
    let m = config.mu_centers.len();
    let mut mu = Vec::with_capacity(n * m);
    for _ in 0..n {
        for &c in &config.mu_centers {
            let v = c + config.mu_noise * (2.0 * rng.random::<f64>() - 1.0);
            mu.push(v.max(0.0));
        }
    }
    let alpha = (0..n * n)
        .map(|_| {
            let edge = rng.random::<f64>() < config.edge_prob;
            let w = rng.random::<f64>() * config.alpha_max;
            if edge {
                w
            } else {
                0.0
            }
        })
        .collect();
    ModelParams::new(n, m, mu, alpha, MarkModel::Linear)
}

#[derive(Debug, Clone)]
pub struct ModelRun {
    pub label: String,
    pub mark: MarkModel,
    /// Shared history plus this model's post-switch events, on `[0, horizon]`.
    pub log: EventLog,
}

#[derive(Debug, Clone)]
pub struct IncentiveOutcome {
    pub params: ModelParams,
    pub history: EventLog,
    pub runs: Vec<ModelRun>,
}

pub fn model_label(mark: &MarkModel) -> String {
    match mark {
        MarkModel::Linear => "independent".to_string(),
        MarkModel::SoftMax { beta } => format!("correlated_beta_{beta}"),
    }
}

/// Generates a shared history with the independent model up to the switch, boosts
/// one product's baseline, and lets each model continue separately.
pub fn run_incentivization(config: &IncentiveConfig) -> Result<IncentiveOutcome> {
    if !(config.switch_time > 0.0 && config.switch_time < config.horizon) {
        return Err(Error::InvalidConfig("switch time must lie inside (0, horizon)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = incentive_params(config, &mut rng)?;
    let history = simulate(&params, &SimConfig::new(config.switch_time, rng.random()))?;

    let mut marks = vec![MarkModel::Linear];
    marks.extend(config.betas.iter().map(|&beta| MarkModel::SoftMax { beta }));
    let mut runs = Vec::with_capacity(marks.len());
    for mark in marks {
        let seed: u64 = rng.random();
        let mut boosted = params.with_mark(mark)?;
        boosted.scale_product_baseline(config.boosted_product, config.boost_factor)?;
        let cont = simulate(
            &boosted,
            &SimConfig::new(config.horizon, seed).with_history(history.clone()),
        )?;
        let log = history.with_horizon(config.horizon)?.concat(&cont)?;
        runs.push(ModelRun {
            label: model_label(&mark),
            mark,
            log,
        });
    }
    Ok(IncentiveOutcome {
        params,
        history,
        runs,
    })
}

/// Per-product event counts with `start < t <= end`.
pub fn counts_between(log: &EventLog, start: f64, end: f64) -> Vec<usize> {
    let mut counts = vec![0; log.n_products()];
    for e in log.events().iter().filter(|e| e.time > start && e.time <= end) {
        counts[e.product] += 1;
    }
    counts
}

/// Per-product intensity curves and cumulative market-share curves of one run.
pub fn scenario_curves(log: &EventLog, bin_width: f64) -> Result<(Vec<CurveSeries>, Vec<CurveSeries>)> {
    let intensity = binned_intensity(log, bin_width, true)?;
    let grid: Vec<f64> = intensity[0]
        .grid
        .iter()
        .zip(&intensity[0].widths)
        .map(|(g, w)| g + w)
        .collect();
    let shares = market_share(log, &grid)?;
    Ok((intensity, shares))
}
