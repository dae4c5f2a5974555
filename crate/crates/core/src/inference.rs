//! Constrained maximum-likelihood fitting.
//!
//! Each user's negative log-likelihood is convex in `theta_u = (alpha_{. u}, mu_u^.)`
//! and users are independent, so [`fit_all`] solves one small problem per user in
//! parallel. Each problem `min f(theta) s.t. theta >= 0` is handled by a log
//! barrier: for `t = t0, t0*mult, ...` minimize `f(theta) - (1/t) sum_k log theta_k`
//! from the previous stage's solution until the duality gap bound `dim / t` falls
//! below the tolerance.
//!
//! The inner minimizer is gradient-only: limited-memory BFGS whose initial inverse
//! Hessian is the diagonal `(1/gamma + 1/(t theta_k^2))^-1`, i.e. a scalar estimate
//! of the likelihood curvature plus the exact barrier curvature, with a
//! fraction-to-boundary cap and Armijo backtracking. A final active-set pass moves
//! coordinates whose barrier multiplier dominates to exactly zero and re-optimizes
//! the remaining ones, so returned points satisfy first-order optimality for the
//! bound-constrained problem.

use std::collections::VecDeque;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{EventFeatures, UserParams};
use crate::metrics::avg_pred_loglik;
use crate::model::{EventLog, MarkModel, ModelParams};

/// Solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Initial barrier weight `t0`.
    pub barrier_t0: f64,
    /// Factor by which `t` grows between stages.
    pub barrier_mult: f64,
    /// Stop once `dim / t` is below this.
    pub barrier_gap_tol: f64,
    /// Inner stopping tolerance on the barrier objective's gradient norm.
    pub inner_grad_tol: f64,
    pub inner_max_iter: usize,
    pub line_search_shrink: f64,
    pub line_search_decrease: f64,
    /// Uniform starting value for every parameter.
    pub init_value: f64,
    /// Number of curvature pairs kept by the inner quasi-Newton solver.
    pub memory: usize,
    /// Run the active-set cleanup after the barrier stages.
    pub polish: bool,
    pub mark: MarkModel,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            barrier_t0: 1.0,
            barrier_mult: 10.0,
            barrier_gap_tol: 1e-6,
            inner_grad_tol: 1e-7,
            inner_max_iter: 500,
            line_search_shrink: 0.5,
            line_search_decrease: 1e-4,
            init_value: 0.01,
            memory: 10,
            polish: true,
            mark: MarkModel::SoftMax { beta: 1.0 },
        }
    }
}

impl FitConfig {
    pub fn with_beta(beta: f64) -> Self {
        Self {
            mark: MarkModel::SoftMax { beta },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("barrier_t0", self.barrier_t0),
            ("barrier_gap_tol", self.barrier_gap_tol),
            ("inner_grad_tol", self.inner_grad_tol),
            ("init_value", self.init_value),
            ("line_search_decrease", self.line_search_decrease),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.barrier_mult > 1.0 && self.barrier_mult.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "barrier_mult must exceed 1, got {}",
                self.barrier_mult
            )));
        }
        if !(self.line_search_shrink > 0.0 && self.line_search_shrink < 1.0) {
            return Err(Error::InvalidConfig("line_search_shrink must be in (0, 1)".into()));
        }
        if self.inner_max_iter == 0 || self.memory == 0 {
            return Err(Error::InvalidConfig("iteration budget and memory must be positive".into()));
        }
        self.mark.validate()
    }
}

/// Diagnostics for one user's fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFitReport {
    pub user: usize,
    pub n_events: usize,
    pub final_nll: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Last barrier stage reached the inner gradient tolerance.
    pub converged: bool,
    /// Gradient norm of the barrier objective at the last barrier weight.
    pub barrier_grad_norm: f64,
    /// Norm of the bound-projected likelihood gradient at the returned point.
    pub projected_grad_norm: f64,
    /// Likelihood value after each barrier stage.
    pub stage_nll: Vec<f64>,
    pub wall_time_secs: f64,
}

impl UserFitReport {
    /// Equality ignoring timing.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self {
            wall_time_secs: 0.0,
            ..self.clone()
        } == Self {
            wall_time_secs: 0.0,
            ..other.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub users: Vec<UserFitReport>,
    pub total_nll: f64,
    pub total_inner_iterations: usize,
    pub n_converged: usize,
    pub wall_time_secs: f64,
}

impl FitReport {
    pub fn all_converged(&self) -> bool {
        self.n_converged == self.users.len()
    }

    pub fn same_outcome(&self, other: &Self) -> bool {
        self.users.len() == other.users.len()
            && self.users.iter().zip(&other.users).all(|(a, b)| a.same_outcome(b))
            && self.total_nll == other.total_nll
            && self.total_inner_iterations == other.total_inner_iterations
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Norm of the gradient with components at the bound (`x_k <= 1e-10`) clamped to
/// their descent-relevant part `min(g_k, 0)`.
pub fn projected_gradient_norm(x: &[f64], grad: &[f64]) -> f64 {
    x.iter()
        .zip(grad)
        .map(|(&xk, &gk)| if xk <= 1e-10 { gk.min(0.0) } else { gk })
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

struct CurvaturePairs {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl CurvaturePairs {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 1e-12 * norm(&s) * norm(&y)) || !sy.is_finite() {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: returns `-H g` with initial diagonal `h0`.
    fn direction(&self, grad: &[f64], h0: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut coeffs = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            coeffs.push(a);
        }
        let mut r: Vec<f64> = q.iter().zip(h0).map(|(qi, hi)| qi * hi).collect();
        for ((s, y, rho), a) in self.pairs.iter().zip(coeffs.into_iter().rev()) {
            let b = rho * dot(y, &r);
            r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
        }
        r.iter_mut().for_each(|v| *v = -*v);
        r
    }
}

struct StageOutcome {
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

/// Minimizes `f(x) - (1/t) sum log x` in place, starting from a strictly positive `x`.
fn barrier_stage<F>(f: &F, x: &mut [f64], t: f64, config: &FitConfig) -> Result<StageOutcome>
where
    F: Fn(&[f64], &mut [f64]) -> Result<f64>,
{
    let dim = x.len();
    let barrier = |x: &[f64], fval: f64, fgrad: &[f64], out: &mut [f64]| -> f64 {
        let mut logs = 0.0;
        for k in 0..dim {
            out[k] = fgrad[k] - 1.0 / (t * x[k]);
            logs += x[k].ln();
        }
        fval - logs / t
    };

    let mut fgrad = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let fval = f(x, &mut fgrad)?;
    let mut phi = barrier(x, fval, &fgrad, &mut grad);
    let mut pairs = CurvaturePairs::new(config.memory);
    let mut gamma: Option<f64> = None;

    let mut trial = vec![0.0; dim];
    let mut trial_fgrad = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];

    let mut iterations = 0;
    while iterations < config.inner_max_iter {
        let gnorm = norm(&grad);
        if gnorm <= config.inner_grad_tol {
            return Ok(StageOutcome {
                iterations,
                grad_norm: gnorm,
                converged: true,
            });
        }
        iterations += 1;

        let curvature = match gamma {
            Some(g) => 1.0 / g,
            None => fgrad.iter().fold(1.0f64, |m, v| m.max(v.abs())),
        };
        let h0: Vec<f64> = x
            .iter()
            .map(|&xk| 1.0 / (curvature + 1.0 / (t * xk * xk)))
            .collect();
        let mut dir = pairs.direction(&grad, &h0);
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            pairs.clear();
            dir = grad.iter().zip(&h0).map(|(g, h)| -g * h).collect();
            slope = dot(&grad, &dir);
        }

        let max_step = x
            .iter()
            .zip(&dir)
            .filter(|(_, &d)| d < 0.0)
            .map(|(&xk, &d)| -0.99 * xk / d)
            .fold(f64::INFINITY, f64::min);
        let mut step = max_step.min(1.0);
        let slack = 1e-14 * (1.0 + phi.abs());
        let mut accepted = None;
        for _ in 0..80 {
            for k in 0..dim {
                trial[k] = x[k] + step * dir[k];
            }
            if trial.iter().all(|&v| v > 0.0) {
                if let Ok(fv) = f(&trial, &mut trial_fgrad) {
                    let trial_phi = barrier(&trial, fv, &trial_fgrad, &mut trial_grad);
                    if trial_phi.is_finite()
                        && trial_phi <= phi + config.line_search_decrease * step * slope + slack
                    {
                        accepted = Some(trial_phi);
                        break;
                    }
                }
            }
            step *= config.line_search_shrink;
        }

        let Some(new_phi) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            gamma = None;
            continue;
        };

        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let yf: Vec<f64> = trial_fgrad.iter().zip(&fgrad).map(|(a, b)| a - b).collect();
        let syf = dot(&s, &yf);
        let yfyf = dot(&yf, &yf);
        if syf > 0.0 && yfyf > 0.0 {
            gamma = Some(syf / yfyf);
        }
        pairs.push(s, y);

        x.copy_from_slice(&trial);
        fgrad.copy_from_slice(&trial_fgrad);
        grad.copy_from_slice(&trial_grad);
        phi = new_phi;
    }
    let gnorm = norm(&grad);
    Ok(StageOutcome {
        iterations,
        grad_norm: gnorm,
        converged: gnorm <= config.inner_grad_tol,
    })
}

/// Active-set cleanup on `min f(x) s.t. x >= 0`, starting from a barrier solution.
/// Returns the iterations used.
fn polish<F>(f: &F, x: &mut [f64], config: &FitConfig) -> Result<usize>
where
    F: Fn(&[f64], &mut [f64]) -> Result<f64>,
{
    let dim = x.len();
    let mut grad = vec![0.0; dim];
    let mut fx = f(x, &mut grad)?;
    // Coordinates where the primal value is dominated by the multiplier estimate.
    let mut active: Vec<bool> = x.iter().zip(&grad).map(|(&xk, &gk)| gk > 0.0 && xk < gk).collect();
    if active.iter().any(|&a| a) {
        let mut snapped = x.to_vec();
        for k in 0..dim {
            if active[k] {
                snapped[k] = 0.0;
            }
        }
        let mut sg = vec![0.0; dim];
        match f(&snapped, &mut sg) {
            Ok(v) if v <= fx + 1e-12 * (1.0 + fx.abs()) => {
                x.copy_from_slice(&snapped);
                fx = v;
                grad = sg;
            }
            _ => active.iter_mut().for_each(|a| *a = false),
        }
    }

    let mut pairs = CurvaturePairs::new(config.memory);
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];
    let mut iterations = 0;
    while iterations < config.inner_max_iter {
        // Release bound coordinates whose gradient points into the interior.
        let mut changed = false;
        for k in 0..dim {
            if active[k] && grad[k] < 0.0 {
                active[k] = false;
                changed = true;
            }
        }
        if changed {
            pairs.clear();
        }
        let free_grad: Vec<f64> = (0..dim).map(|k| if active[k] { 0.0 } else { grad[k] }).collect();
        if norm(&free_grad) <= config.inner_grad_tol {
            break;
        }
        iterations += 1;

        let scale = pairs
            .pairs
            .back()
            .map(|(_, y, rho)| rho.recip() / dot(y, y))
            .unwrap_or_else(|| 1.0 / free_grad.iter().fold(1.0f64, |m, v| m.max(v.abs())));
        let h0: Vec<f64> = (0..dim)
            .map(|k| if active[k] { 0.0 } else if x[k] > 0.0 { scale } else { scale.min(1e-3) })
            .collect();
        let mut dir = pairs.direction(&free_grad, &h0);
        for k in 0..dim {
            if active[k] {
                dir[k] = 0.0;
            }
        }
        let mut slope = dot(&free_grad, &dir);
        if !(slope < 0.0) {
            pairs.clear();
            dir = free_grad.iter().zip(&h0).map(|(g, h)| -g * h).collect();
            slope = dot(&free_grad, &dir);
            if !(slope < 0.0) {
                break;
            }
        }

        let (mut max_step, mut blocking) = (f64::INFINITY, None);
        for k in 0..dim {
            if dir[k] < 0.0 {
                let s = -x[k] / dir[k];
                if s < max_step {
                    max_step = s;
                    blocking = Some(k);
                }
            }
        }
        let mut step = max_step.min(1.0);
        let slack = 1e-14 * (1.0 + fx.abs());
        let mut accepted = None;
        for _ in 0..80 {
            for k in 0..dim {
                trial[k] = (x[k] + step * dir[k]).max(0.0);
            }
            if step == max_step {
                if let Some(b) = blocking {
                    trial[b] = 0.0;
                }
            }
            if let Ok(v) = f(&trial, &mut trial_grad) {
                if v <= fx + config.line_search_decrease * step * slope + slack {
                    accepted = Some(v);
                    break;
                }
            }
            step *= config.line_search_shrink;
        }
        let Some(v) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        let hit_bound = step == max_step && blocking.is_some();
        let s: Vec<f64> = trial.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = (0..dim)
            .map(|k| if active[k] { 0.0 } else { trial_grad[k] - grad[k] })
            .collect();
        x.copy_from_slice(&trial);
        grad.copy_from_slice(&trial_grad);
        fx = v;
        if hit_bound {
            if let Some(b) = blocking {
                active[b] = true;
            }
            pairs.clear();
        } else {
            pairs.push(s, y);
        }
    }
    Ok(iterations)
}

/// Fits one user from precomputed features. Returns the packed parameters.
pub fn fit_user_features(features: &EventFeatures, config: &FitConfig) -> Result<(Vec<f64>, UserFitReport)> {
    config.validate()?;
    let start = Instant::now();
    let full_dim = features.dim();
    let mark = config.mark;
    // Influence from a source that never fires before the horizon does not enter
    // the likelihood; those weights are pinned to zero.
    let free: Vec<usize> = features
        .compensator_weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(j, _)| j)
        .chain(features.n_users()..full_dim)
        .collect();
    let dim = free.len();
    let expand = |x: &[f64]| {
        let mut full = vec![0.0; full_dim];
        for (k, &i) in free.iter().enumerate() {
            full[i] = x[k];
        }
        full
    };
    let objective = |x: &[f64], g: &mut [f64]| {
        let mut full_grad = vec![0.0; full_dim];
        let v = features.nll_gradient(&expand(x), &mark, &mut full_grad)?;
        for (k, &i) in free.iter().enumerate() {
            g[k] = full_grad[i];
        }
        Ok(v)
    };
    let nll = |x: &[f64]| features.nll(&expand(x), &mark);

    let mut x = vec![config.init_value; dim];
    let mut scratch = vec![0.0; dim];
    if objective(&x, &mut scratch).is_err() {
        x.iter_mut().for_each(|v| *v = 10.0 * config.init_value);
        objective(&x, &mut scratch)?;
    }

    let mut t = config.barrier_t0;
    let mut outer = 0;
    let mut inner = 0;
    let mut stage_nll = Vec::new();
    let last = loop {
        let stage = barrier_stage(&objective, &mut x, t, config)?;
        inner += stage.iterations;
        outer += 1;
        stage_nll.push(nll(&x)?);
        if (dim as f64) / t < config.barrier_gap_tol || outer >= 64 {
            break stage;
        }
        t *= config.barrier_mult;
    };

    let barrier_x = x.clone();
    let barrier_nll = *stage_nll.last().expect("at least one stage");
    let mut final_nll = barrier_nll;
    if config.polish {
        match polish(&objective, &mut x, config) {
            Ok(iters) => {
                inner += iters;
                match nll(&x) {
                    Ok(v) if v <= barrier_nll + 1e-12 * (1.0 + barrier_nll.abs()) => final_nll = v,
                    _ => x = barrier_x,
                }
            }
            Err(_) => x = barrier_x,
        }
    }

    let x = expand(&x);
    let mut grad = vec![0.0; full_dim];
    features.nll_gradient(&x, &mark, &mut grad)?;
    let report = UserFitReport {
        user: features.user(),
        n_events: features.n_events(),
        final_nll,
        outer_iterations: outer,
        inner_iterations: inner,
        converged: last.converged,
        barrier_grad_norm: last.grad_norm,
        projected_grad_norm: projected_gradient_norm(&x, &grad),
        stage_nll,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

/// Fits the parameters of a single target user.
pub fn fit_user(log: &EventLog, user: usize, config: &FitConfig) -> Result<(UserParams, UserFitReport)> {
    let features = EventFeatures::build(log, user)?;
    let (x, report) = fit_user_features(&features, config)?;
    Ok((UserParams::from_packed(log.n_users(), &x), report))
}

/// How per-user problems are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// Use the global rayon pool.
    #[default]
    Global,
    /// A dedicated pool with this many workers.
    Workers(usize),
}

impl Parallelism {
    /// Reads `CASCADES_WORKERS`; unset or unparsable means all cores.
    pub fn from_env() -> Self {
        match std::env::var("CASCADES_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()) {
            Some(0) | None => Parallelism::Global,
            Some(1) => Parallelism::Sequential,
            Some(n) => Parallelism::Workers(n),
        }
    }
}

/// Fits every user and assembles the full `(mu, A)`, scheduling users as
/// [`Parallelism::from_env`] says.
pub fn fit_all(log: &EventLog, config: &FitConfig) -> Result<(ModelParams, FitReport)> {
    fit_all_with(log, config, Parallelism::from_env())
}

pub fn fit_all_with(
    log: &EventLog,
    config: &FitConfig,
    parallelism: Parallelism,
) -> Result<(ModelParams, FitReport)> {
    config.validate()?;
    let start = Instant::now();
    let features = EventFeatures::build_all(log)?;
    let solve = |f: &EventFeatures| fit_user_features(f, config);
    let results: Vec<Result<(Vec<f64>, UserFitReport)>> = match parallelism {
        Parallelism::Sequential => features.iter().map(solve).collect(),
        Parallelism::Global => features.par_iter().map(solve).collect(),
        Parallelism::Workers(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?
            .install(|| features.par_iter().map(solve).collect()),
    };

    let (n, m) = (log.n_users(), log.n_products());
    let mut params = ModelParams::zeros(n, m, config.mark)?;
    let mut users = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (u, r) in results.into_iter().enumerate() {
        match r {
            Ok((x, report)) => {
                params.set_user(u, &x[..n], &x[n..])?;
                users.push(report);
            }
            Err(e) => failures.push(format!("user {u}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(Error::FitFailed(failures.join("; ")));
    }
    let report = FitReport {
        total_nll: users.iter().map(|r| r.final_nll).sum(),
        total_inner_iterations: users.iter().map(|r| r.inner_iterations).sum(),
        n_converged: users.iter().filter(|r| r.converged).count(),
        users,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((params, report))
}

/// Outcome of choosing `beta` on a held-out window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSelection {
    pub beta: f64,
    /// `(beta, held-out negative log-likelihood per event)` for each grid point;
    /// infeasible fits score `+inf`.
    pub scores: Vec<(f64, f64)>,
}

pub const DEFAULT_BETA_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_HOLDOUT: f64 = 0.2;

/// Chooses `beta` from `grid` by fitting on the head of the log and scoring the
/// predictive likelihood of the last `holdout_fraction` of the time window.
pub fn cross_validate_beta(
    log: &EventLog,
    grid: &[f64],
    holdout_fraction: f64,
    config: &FitConfig,
) -> Result<BetaSelection> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("beta grid"));
    }
    if let Some(b) = grid.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(Error::InvalidConfig(format!("beta grid value {b} must be positive")));
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "holdout fraction {holdout_fraction} must lie in (0, 1)"
        )));
    }
    if grid.len() == 1 {
        return Ok(BetaSelection {
            beta: grid[0],
            scores: vec![(grid[0], f64::NAN)],
        });
    }
    let split = log.horizon() * (1.0 - holdout_fraction);
    let head = log.head(split);
    let tail = log.tail(split);
    if head.is_empty() || tail.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "split at {split} leaves {} head and {} tail events",
            head.len(),
            tail.len()
        )));
    }
    let mut scores = Vec::with_capacity(grid.len());
    for &beta in grid {
        let cfg = FitConfig {
            mark: MarkModel::SoftMax { beta },
            ..config.clone()
        };
        let (params, _) = fit_all(&head, &cfg)?;
        let score = match avg_pred_loglik(&head, &tail, &params) {
            Ok(v) => v,
            Err(Error::InfeasibleLikelihood { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        scores.push((beta, score));
    }
    let mut best = 0;
    for (i, &(_, s)) in scores.iter().enumerate() {
        if s < scores[best].1 {
            best = i;
        }
    }
    Ok(BetaSelection {
        beta: scores[best].0,
        scores,
    })
}
