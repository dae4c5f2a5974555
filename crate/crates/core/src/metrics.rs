//! Evaluation criteria: parameter-recovery errors, held-out predictive likelihood,
//! and agreement scores between binned event curves.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::predictive_nll;
use crate::model::{EventLog, ModelParams};
use crate::simulation::binned_intensity_window;

/// A labelled series on a strictly increasing grid. `widths[i]` is the span the
/// value at `grid[i]` represents (the bin width for binned curves).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub label: String,
    pub grid: Vec<f64>,
    pub widths: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

impl CurveSeries {
    pub fn new(label: String, grid: Vec<f64>, widths: Vec<f64>, values: Vec<Option<f64>>) -> Result<Self> {
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(format!("grid of '{label}' is not strictly increasing")));
        }
        if values.len() != grid.len() || widths.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "series '{label}' has {} grid points, {} widths and {} values",
                grid.len(),
                widths.len(),
                values.len()
            )));
        }
        Ok(Self {
            label,
            grid,
            widths,
            values,
        })
    }

    /// A fully observed series with unit widths.
    pub fn from_values(label: &str, values: &[f64]) -> Self {
        let n = values.len();
        Self {
            label: label.to_string(),
            grid: (0..n).map(|i| i as f64).collect(),
            widths: vec![1.0; n],
            values: values.iter().copied().map(Some).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

fn check_same_grid(a: &CurveSeries, b: &CurveSeries) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::ShapeMismatch(format!(
            "series '{}' and '{}' are on different grids",
            a.label, b.label
        )));
    }
    Ok(())
}

fn check_shapes(est: &ModelParams, truth: &ModelParams) -> Result<()> {
    if est.n_users() != truth.n_users() || est.n_products() != truth.n_products() {
        return Err(Error::ShapeMismatch(format!(
            "estimate is {}x{}, truth is {}x{}",
            est.n_users(),
            est.n_products(),
            truth.n_users(),
            truth.n_products()
        )));
    }
    Ok(())
}

fn all_entries(p: &ModelParams) -> impl Iterator<Item = f64> + '_ {
    p.alpha_matrix().iter().chain(p.mu_matrix()).copied()
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Mean squared error over all `N*N + N*M` parameters.
pub fn param_mse(est: &ModelParams, truth: &ModelParams) -> Result<f64> {
    check_shapes(est, truth)?;
    Ok(mean(all_entries(est).zip(all_entries(truth)).map(|(e, t)| (e - t).powi(2))))
}

pub const DEFAULT_MAE_FLOOR: f64 = 1e-6;

/// Mean relative error `|est - true| / max(true, floor)` over all parameters.
pub fn param_mae(est: &ModelParams, truth: &ModelParams, floor: f64) -> Result<f64> {
    check_shapes(est, truth)?;
    if !(floor > 0.0) {
        return Err(Error::InvalidConfig(format!("MAE floor {floor} must be positive")));
    }
    Ok(mean(
        all_entries(est)
            .zip(all_entries(truth))
            .map(|(e, t)| (e - t).abs() / t.max(floor)),
    ))
}

/// Recovery errors over the influence matrix, the baselines, and both jointly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub mse: f64,
    pub mae: f64,
    pub mse_alpha: f64,
    pub mae_alpha: f64,
    pub mse_mu: f64,
    pub mae_mu: f64,
}

pub fn param_errors(est: &ModelParams, truth: &ModelParams) -> Result<ParamErrors> {
    check_shapes(est, truth)?;
    let sq = |a: &[f64], b: &[f64]| mean(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)));
    let rel = |a: &[f64], b: &[f64]| mean(a.iter().zip(b).map(|(x, y)| (x - y).abs() / y.max(DEFAULT_MAE_FLOOR)));
    Ok(ParamErrors {
        mse: param_mse(est, truth)?,
        mae: param_mae(est, truth, DEFAULT_MAE_FLOOR)?,
        mse_alpha: sq(est.alpha_matrix(), truth.alpha_matrix()),
        mae_alpha: rel(est.alpha_matrix(), truth.alpha_matrix()),
        mse_mu: sq(est.mu_matrix(), truth.mu_matrix()),
        mae_mu: rel(est.mu_matrix(), truth.mu_matrix()),
    })
}

/// Negative log-likelihood of the test window per test event, conditioned on the
/// whole training log and the preceding test events.
pub fn avg_pred_loglik(train: &EventLog, test: &EventLog, params: &ModelParams) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test log has no events"));
    }
    Ok(predictive_nll(train, test, params)? / test.len() as f64)
}

/// Sample Pearson correlation over points present in both series.
pub fn pearson(a: &CurveSeries, b: &CurveSeries) -> Result<f64> {
    check_same_grid(a, b)?;
    let pairs: Vec<(f64, f64)> = a
        .values
        .iter()
        .zip(&b.values)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    pearson_pairs(&pairs)
}

fn pearson_pairs(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::UndefinedMetric("pearson needs two paired points"));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric("pearson with zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `1 / (1 + sum_i |a_i - b_i| width_i)`.
pub fn inv_l1(a: &CurveSeries, b: &CurveSeries) -> Result<f64> {
    check_same_grid(a, b)?;
    let dist: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .zip(&a.widths)
        .filter_map(|((x, y), w)| Some(((*x)? - (*y)?).abs() * w))
        .sum();
    Ok(1.0 / (1.0 + dist))
}

/// Which curve a comparison row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKey {
    Product(usize),
    /// Aggregate intensity over all products.
    All,
    /// Per-product curves stacked end to end.
    Pooled,
}

impl fmt::Display for CurveKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveKey::Product(p) => write!(f, "{p}"),
            CurveKey::All => f.write_str("all"),
            CurveKey::Pooled => f.write_str("pooled"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub key: CurveKey,
    /// `None` when undefined (too few points or zero variance).
    pub pearson: Option<f64>,
    pub inv_l1: f64,
    pub real_count: usize,
    pub generated_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model: String,
    pub rows: Vec<ComparisonRow>,
}

impl ModelComparison {
    pub fn row(&self, key: CurveKey) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.key == key)
    }
}

fn stack(series: &[CurveSeries]) -> Vec<Option<f64>> {
    series.iter().flat_map(|s| s.values.iter().copied()).collect()
}

fn stacked_pearson(a: &[CurveSeries], b: &[CurveSeries]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = stack(a)
        .into_iter()
        .zip(stack(b))
        .filter_map(|(x, y)| Some((x?, y?)))
        .collect();
    pearson_pairs(&pairs).ok()
}

fn stacked_inv_l1(a: &[CurveSeries], b: &[CurveSeries]) -> Result<f64> {
    let mut dist = 0.0;
    for (x, y) in a.iter().zip(b) {
        dist += 1.0 / inv_l1(x, y)? - 1.0;
    }
    Ok(1.0 / (1.0 + dist))
}

/// Scores each generated log against the real one on binned intensities over
/// `[start, real_test.horizon]`: one row per product, the aggregate curve, and the
/// stacked per-product curves.
pub fn compare_models(
    real_test: &EventLog,
    generated: &[(String, EventLog)],
    start: f64,
    bin_width: f64,
) -> Result<Vec<ModelComparison>> {
    let end = real_test.horizon();
    let real_parts = binned_intensity_window(real_test, start, end, bin_width, true)?;
    let real_all = binned_intensity_window(real_test, start, end, bin_width, false)?;
    let real_counts = real_test.product_counts();
    generated
        .iter()
        .map(|(label, log)| {
            if log.n_products() != real_test.n_products() || log.n_users() != real_test.n_users() {
                return Err(Error::ShapeMismatch(format!("model '{label}' has different dimensions")));
            }
            let parts = binned_intensity_window(log, start, end, bin_width, true)?;
            let all = binned_intensity_window(log, start, end, bin_width, false)?;
            let counts = log.product_counts();
            let mut rows = Vec::with_capacity(real_parts.len() + 2);
            for (p, (r, g)) in real_parts.iter().zip(&parts).enumerate() {
                rows.push(ComparisonRow {
                    key: CurveKey::Product(p),
                    pearson: pearson(r, g).ok(),
                    inv_l1: inv_l1(r, g)?,
                    real_count: real_counts[p],
                    generated_count: counts[p],
                });
            }
            rows.push(ComparisonRow {
                key: CurveKey::All,
                pearson: pearson(&real_all[0], &all[0]).ok(),
                inv_l1: inv_l1(&real_all[0], &all[0])?,
                real_count: real_test.len(),
                generated_count: log.len(),
            });
            rows.push(ComparisonRow {
                key: CurveKey::Pooled,
                pearson: stacked_pearson(&real_parts, &parts),
                inv_l1: stacked_inv_l1(&real_parts, &parts)?,
                real_count: real_test.len(),
                generated_count: log.len(),
            });
            Ok(ModelComparison {
                model: label.clone(),
                rows,
            })
        })
        .collect()
}

/// Everything `evaluate` reports for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub avg_pred_loglik: Option<f64>,
    pub errors: Option<ParamErrors>,
    pub comparisons: Vec<ModelComparison>,
}

/// One `metric,product,value` row; `value` is `None` when undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub product: String,
    pub value: Option<f64>,
}

impl MetricsReport {
    pub fn rows(&self) -> Vec<MetricRow> {
        let mut rows = Vec::new();
        let mut push = |metric: String, product: String, value: Option<f64>| {
            rows.push(MetricRow { metric, product, value })
        };
        if let Some(v) = self.avg_pred_loglik {
            push("avg_pred_loglik".into(), "all".into(), Some(v));
        }
        if let Some(e) = self.errors {
            push("mse".into(), "all".into(), Some(e.mse));
            push("mae".into(), "all".into(), Some(e.mae));
            push("mse_alpha".into(), "all".into(), Some(e.mse_alpha));
            push("mae_alpha".into(), "all".into(), Some(e.mae_alpha));
            push("mse_mu".into(), "all".into(), Some(e.mse_mu));
            push("mae_mu".into(), "all".into(), Some(e.mae_mu));
        }
        let single = self.comparisons.len() == 1;
        for c in &self.comparisons {
            let prefix = if single { String::new() } else { format!("{}:", c.model) };
            for r in &c.rows {
                let key = r.key.to_string();
                push(format!("{prefix}pearson"), key.clone(), r.pearson);
                push(format!("{prefix}inv_l1"), key.clone(), Some(r.inv_l1));
                push(format!("{prefix}count_real"), key.clone(), Some(r.real_count as f64));
                push(format!("{prefix}count_generated"), key, Some(r.generated_count as f64));
            }
        }
        rows
    }
}
