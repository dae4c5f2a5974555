//! Domain types and the intensity engine.
//!
//! Every user `u` carries a tendency toward each product `p`,
//!
//! ```text
//! g_u^p(t) = mu_u^p + sum_{j} alpha_{j u} B_j^p(t),   B_j^p(t) = sum_{i: u_i = j, p_i = p, t_i < t} exp(-(t - t_i))
//! ```
//!
//! and a total adoption intensity `lambda_u(t) = sum_p g_u^p(t)`. The product of an
//! adoption is drawn from the mark density, either a soft-max over the tendencies
//! or their linear normalization.
//!
//! The decayed sums `B_j^p` are kept in a [`DecayState`] that is advanced through a
//! sorted log, so a full pass costs one state update per event. Intensities at time
//! `t` are always read before events at `t` are absorbed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::log_sum_exp;

/// One adoption: `user` adopted `product` at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub user: usize,
    pub product: usize,
}

impl Event {
    pub fn new(time: f64, user: usize, product: usize) -> Self {
        Self {
            time,
            user,
            product,
        }
    }
}

/// A time-sorted realization of the process over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
    horizon: f64,
    n_users: usize,
    n_products: usize,
}

impl EventLog {
    /// Builds a log from events that must already be sorted by time.
    pub fn new(n_users: usize, n_products: usize, horizon: f64, events: Vec<Event>) -> Result<Self> {
        if n_users == 0 || n_products == 0 {
            return Err(Error::ZeroDimensions {
                n_users,
                n_products,
            });
        }
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::InvalidLog(format!("horizon {horizon} must be finite and >= 0")));
        }
        let mut prev = 0.0;
        for (i, e) in events.iter().enumerate() {
            if !e.time.is_finite() || e.time < 0.0 {
                return Err(Error::InvalidLog(format!("event {i} has invalid time {}", e.time)));
            }
            if e.time < prev {
                return Err(Error::InvalidLog(format!(
                    "event {i} at time {} precedes previous event at {prev}",
                    e.time
                )));
            }
            if e.time > horizon {
                return Err(Error::InvalidLog(format!(
                    "event {i} at time {} is after the horizon {horizon}",
                    e.time
                )));
            }
            if e.user >= n_users {
                return Err(Error::IndexOutOfRange {
                    what: "user",
                    index: e.user,
                    bound: n_users,
                });
            }
            if e.product >= n_products {
                return Err(Error::IndexOutOfRange {
                    what: "product",
                    index: e.product,
                    bound: n_products,
                });
            }
            prev = e.time;
        }
        Ok(Self {
            events,
            horizon,
            n_users,
            n_products,
        })
    }

    /// Sorts events by time (stable, so ties keep input order) and builds the log.
    pub fn from_unsorted(
        n_users: usize,
        n_products: usize,
        horizon: f64,
        mut events: Vec<Event>,
    ) -> Result<Self> {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self::new(n_users, n_products, horizon, events)
    }

    pub fn empty(n_users: usize, n_products: usize, horizon: f64) -> Result<Self> {
        Self::new(n_users, n_products, horizon, Vec::new())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Events strictly before `s`, i.e. the history `D(s)`.
    pub fn before(&self, s: f64) -> &[Event] {
        let end = self.events.partition_point(|e| e.time < s);
        &self.events[..end]
    }

    /// `D_u`: the events of one user, in log order.
    pub fn user_events(&self, user: usize) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(move |e| e.user == user)
    }

    /// `D^q`: the events carrying one product, in log order.
    pub fn product_events(&self, product: usize) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(move |e| e.product == product)
    }

    /// `D_u^q(s)`.
    pub fn user_product_events_before(
        &self,
        user: usize,
        product: usize,
        s: f64,
    ) -> impl Iterator<Item = &Event> + '_ {
        self.before(s)
            .iter()
            .filter(move |e| e.user == user && e.product == product)
    }

    /// The first `n` events with the horizon moved to the time of the last kept event
    /// (or kept at the original horizon when all events are retained).
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.events.len());
        let horizon = if n == self.events.len() {
            self.horizon
        } else if n == 0 {
            0.0
        } else {
            self.events[n - 1].time
        };
        Self {
            events: self.events[..n].to_vec(),
            horizon,
            n_users: self.n_users,
            n_products: self.n_products,
        }
    }

    /// Events with `time < split` and horizon `split`.
    pub fn head(&self, split: f64) -> Self {
        Self {
            events: self.before(split).to_vec(),
            horizon: split.min(self.horizon),
            n_users: self.n_users,
            n_products: self.n_products,
        }
    }

    /// Events with `time >= split`, same horizon.
    pub fn tail(&self, split: f64) -> Self {
        let start = self.events.partition_point(|e| e.time < split);
        Self {
            events: self.events[start..].to_vec(),
            horizon: self.horizon,
            n_users: self.n_users,
            n_products: self.n_products,
        }
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.n_users, self.n_products, horizon, self.events.clone())
    }

    /// Concatenates a later log onto this one. `later` must start no earlier than
    /// this log's last event.
    pub fn concat(&self, later: &EventLog) -> Result<Self> {
        if later.n_users != self.n_users || later.n_products != self.n_products {
            return Err(Error::ShapeMismatch("logs have different dimensions".into()));
        }
        let mut events = self.events.clone();
        events.extend_from_slice(&later.events);
        Self::new(
            self.n_users,
            self.n_products,
            later.horizon.max(self.horizon),
            events,
        )
    }

    pub fn product_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_products];
        for e in &self.events {
            counts[e.product] += 1;
        }
        counts
    }

    pub fn user_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_users];
        for e in &self.events {
            counts[e.user] += 1;
        }
        counts
    }
}

/// How the product of an adoption is chosen from the tendencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MarkModel {
    /// `f_u(p|t) = exp(beta g_u^p) / sum_q exp(beta g_u^q)`. Large `beta` approaches an
    /// argmax (competition), small `beta` approaches uniform (cooperation).
    #[serde(rename = "softmax")]
    SoftMax { beta: f64 },
    /// `f_u(p|t) = g_u^p / sum_q g_u^q`; the process splits into independent
    /// per-product cascades.
    Linear,
}

impl MarkModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarkModel::SoftMax { beta } if !(beta.is_finite() && beta > 0.0) => Err(
                Error::InvalidParams(format!("soft-max beta must be finite and positive, got {beta}")),
            ),
            _ => Ok(()),
        }
    }

    /// Writes the mark density for the given tendencies into `out`.
    pub fn density_into(&self, tendencies: &[f64], out: &mut [f64]) -> Option<()> {
        debug_assert_eq!(tendencies.len(), out.len());
        match *self {
            MarkModel::SoftMax { beta } => {
                let max = tendencies
                    .iter()
                    .fold(f64::NEG_INFINITY, |m, &g| m.max(beta * g));
                let mut sum = 0.0;
                for (o, &g) in out.iter_mut().zip(tendencies) {
                    *o = (beta * g - max).exp();
                    sum += *o;
                }
                for o in out.iter_mut() {
                    *o /= sum;
                }
                Some(())
            }
            MarkModel::Linear => {
                let sum: f64 = tendencies.iter().sum();
                if sum <= 0.0 {
                    return None;
                }
                for (o, &g) in out.iter_mut().zip(tendencies) {
                    *o = g / sum;
                }
                Some(())
            }
        }
    }

    /// `log f(p | tendencies)`, `None` when undefined.
    pub fn log_density(&self, tendencies: &[f64], product: usize) -> Option<f64> {
        match *self {
            MarkModel::SoftMax { beta } => {
                let scaled: Vec<f64> = tendencies.iter().map(|g| beta * g).collect();
                let lse = log_sum_exp(&scaled).ok()?;
                Some(scaled[product] - lse)
            }
            MarkModel::Linear => {
                let sum: f64 = tendencies.iter().sum();
                if sum <= 0.0 || tendencies[product] <= 0.0 {
                    return None;
                }
                Some((tendencies[product] / sum).ln())
            }
        }
    }
}

/// Model parameters `theta = (mu, A)` plus the mark model.
///
/// `mu` is stored row-major as `N x M` (`mu[u][p]`), `alpha` row-major as `N x N`
/// with row = source and column = target, so `alpha(j, u)` is the influence of `j`
/// on `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n_users: usize,
    n_products: usize,
    mu: Vec<f64>,
    alpha: Vec<f64>,
    mark: MarkModel,
}

impl ModelParams {
    pub fn new(
        n_users: usize,
        n_products: usize,
        mu: Vec<f64>,
        alpha: Vec<f64>,
        mark: MarkModel,
    ) -> Result<Self> {
        if n_users == 0 || n_products == 0 {
            return Err(Error::ZeroDimensions {
                n_users,
                n_products,
            });
        }
        if mu.len() != n_users * n_products {
            return Err(Error::ShapeMismatch(format!(
                "mu has {} entries, expected {}",
                mu.len(),
                n_users * n_products
            )));
        }
        if alpha.len() != n_users * n_users {
            return Err(Error::ShapeMismatch(format!(
                "alpha has {} entries, expected {}",
                alpha.len(),
                n_users * n_users
            )));
        }
        if let Some(v) = mu.iter().chain(&alpha).find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "all parameters must be finite and nonnegative, found {v}"
            )));
        }
        mark.validate()?;
        Ok(Self {
            n_users,
            n_products,
            mu,
            alpha,
            mark,
        })
    }

    pub fn zeros(n_users: usize, n_products: usize, mark: MarkModel) -> Result<Self> {
        Self::new(
            n_users,
            n_products,
            vec![0.0; n_users * n_products],
            vec![0.0; n_users * n_users],
            mark,
        )
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    pub fn mark(&self) -> MarkModel {
        self.mark
    }

    pub fn with_mark(&self, mark: MarkModel) -> Result<Self> {
        mark.validate()?;
        Ok(Self {
            mark,
            ..self.clone()
        })
    }

    pub fn mu(&self, user: usize, product: usize) -> f64 {
        self.mu[user * self.n_products + product]
    }

    pub fn alpha(&self, source: usize, target: usize) -> f64 {
        self.alpha[source * self.n_users + target]
    }

    pub fn mu_matrix(&self) -> &[f64] {
        &self.mu
    }

    pub fn alpha_matrix(&self) -> &[f64] {
        &self.alpha
    }

    /// `mu_u = sum_p mu_u^p`.
    pub fn base_rate(&self, user: usize) -> f64 {
        self.mu_row(user).iter().sum()
    }

    pub fn mu_row(&self, user: usize) -> &[f64] {
        &self.mu[user * self.n_products..(user + 1) * self.n_products]
    }

    /// The column `alpha_{. u}`: influence of every source on `user`.
    pub fn alpha_column(&self, user: usize) -> Vec<f64> {
        (0..self.n_users).map(|j| self.alpha(j, user)).collect()
    }

    /// Multiplies `mu_u^product` by `factor` for every user.
    pub fn scale_product_baseline(&mut self, product: usize, factor: f64) -> Result<()> {
        if product >= self.n_products {
            return Err(Error::IndexOutOfRange {
                what: "product",
                index: product,
                bound: self.n_products,
            });
        }
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParams(format!("boost factor {factor} must be positive")));
        }
        for u in 0..self.n_users {
            self.mu[u * self.n_products + product] *= factor;
        }
        Ok(())
    }

    /// Writes the parameters of one target user back into the matrices.
    pub fn set_user(&mut self, user: usize, alpha_col: &[f64], mu_row: &[f64]) -> Result<()> {
        if alpha_col.len() != self.n_users || mu_row.len() != self.n_products {
            return Err(Error::ShapeMismatch("user parameter block has wrong length".into()));
        }
        if let Some(v) = alpha_col.iter().chain(mu_row).find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParams(format!("negative or nonfinite value {v}")));
        }
        for (j, &a) in alpha_col.iter().enumerate() {
            self.alpha[j * self.n_users + user] = a;
        }
        self.mu[user * self.n_products..(user + 1) * self.n_products].copy_from_slice(mu_row);
        Ok(())
    }

    /// `max_u sum_j alpha_{j u}`. With the unit-rate kernel the branching matrix is
    /// `A` itself; values at or above one mean the process may explode.
    pub fn max_in_weight(&self) -> f64 {
        (0..self.n_users)
            .map(|u| (0..self.n_users).map(|j| self.alpha(j, u)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `sum_u alpha_{j u}` for every source `j`.
    pub fn out_weights(&self) -> Vec<f64> {
        self.alpha
            .chunks(self.n_users)
            .map(|row| row.iter().sum())
            .collect()
    }

    fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.n_users {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: user,
                bound: self.n_users,
            });
        }
        Ok(())
    }

    fn check_product(&self, product: usize) -> Result<()> {
        if product >= self.n_products {
            return Err(Error::IndexOutOfRange {
                what: "product",
                index: product,
                bound: self.n_products,
            });
        }
        Ok(())
    }

    pub(crate) fn check_log(&self, log: &EventLog) -> Result<()> {
        if log.n_users() != self.n_users || log.n_products() != self.n_products {
            return Err(Error::ShapeMismatch(format!(
                "log is {}x{}, parameters are {}x{}",
                log.n_users(),
                log.n_products(),
                self.n_users,
                self.n_products
            )));
        }
        Ok(())
    }
}

/// Exponentially decayed event sums `B_j^q(t)`, the sufficient statistics of every
/// intensity in the model.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayState {
    n_users: usize,
    n_products: usize,
    b: Vec<f64>,
    b_total: Vec<f64>,
    time: f64,
}

impl DecayState {
    pub fn new(n_users: usize, n_products: usize) -> Result<Self> {
        if n_users == 0 || n_products == 0 {
            return Err(Error::ZeroDimensions {
                n_users,
                n_products,
            });
        }
        Ok(Self {
            n_users,
            n_products,
            b: vec![0.0; n_users * n_products],
            b_total: vec![0.0; n_users],
            time: 0.0,
        })
    }

    pub fn for_params(params: &ModelParams) -> Self {
        Self::new(params.n_users(), params.n_products()).expect("params have positive dimensions")
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    pub fn current_time(&self) -> f64 {
        self.time
    }

    /// `B_j^q` at the current time.
    pub fn b(&self, source: usize, product: usize) -> f64 {
        self.b[source * self.n_products + product]
    }

    /// `B_j = sum_q B_j^q` at the current time.
    pub fn b_total(&self, source: usize) -> f64 {
        self.b_total[source]
    }

    /// Row `B_j^.` for one source.
    pub fn b_row(&self, source: usize) -> &[f64] {
        &self.b[source * self.n_products..(source + 1) * self.n_products]
    }

    pub fn b_matrix(&self) -> &[f64] {
        &self.b
    }

    pub fn b_totals(&self) -> &[f64] {
        &self.b_total
    }

    /// Decays every sum to time `t >= current_time`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if !(t >= self.time) {
            return Err(Error::TimeRegression {
                current: self.time,
                requested: t,
            });
        }
        let dt = t - self.time;
        if dt > 0.0 {
            let factor = (-dt).exp();
            self.b.iter_mut().for_each(|v| *v *= factor);
            self.b_total.iter_mut().for_each(|v| *v *= factor);
        }
        self.time = t;
        Ok(())
    }

    /// Adds an event at the current time. The event time must equal `current_time`.
    pub fn absorb(&mut self, event: &Event) -> Result<()> {
        if event.user >= self.n_users {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: event.user,
                bound: self.n_users,
            });
        }
        if event.product >= self.n_products {
            return Err(Error::IndexOutOfRange {
                what: "product",
                index: event.product,
                bound: self.n_products,
            });
        }
        if event.time != self.time {
            return Err(Error::TimeRegression {
                current: self.time,
                requested: event.time,
            });
        }
        self.b[event.user * self.n_products + event.product] += 1.0;
        self.b_total[event.user] += 1.0;
        Ok(())
    }

    pub fn advance_and_absorb(&mut self, event: &Event) -> Result<()> {
        self.advance_to(event.time)?;
        self.absorb(event)
    }

    fn check(&self, params: &ModelParams) -> Result<()> {
        if params.n_users() != self.n_users || params.n_products() != self.n_products {
            return Err(Error::ShapeMismatch("decay state and parameters differ in shape".into()));
        }
        Ok(())
    }

    /// `g_u^p(t) = mu_u^p + sum_j alpha_{j u} B_j^p(t)` at the current time.
    pub fn tendency(&self, params: &ModelParams, user: usize, product: usize) -> Result<f64> {
        self.check(params)?;
        params.check_user(user)?;
        params.check_product(product)?;
        Ok(self.tendency_unchecked(params, user, product))
    }

    fn tendency_unchecked(&self, params: &ModelParams, user: usize, product: usize) -> f64 {
        let mut g = params.mu(user, product);
        for j in 0..self.n_users {
            g += params.alpha(j, user) * self.b[j * self.n_products + product];
        }
        g
    }

    /// All `M` tendencies of a user.
    pub fn tendencies_into(&self, params: &ModelParams, user: usize, out: &mut [f64]) -> Result<()> {
        self.check(params)?;
        params.check_user(user)?;
        if out.len() != self.n_products {
            return Err(Error::ShapeMismatch("tendency buffer has wrong length".into()));
        }
        out.copy_from_slice(params.mu_row(user));
        for j in 0..self.n_users {
            let a = params.alpha(j, user);
            if a != 0.0 {
                for (o, &b) in out.iter_mut().zip(self.b_row(j)) {
                    *o += a * b;
                }
            }
        }
        Ok(())
    }

    pub fn tendencies(&self, params: &ModelParams, user: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_products];
        self.tendencies_into(params, user, &mut out)?;
        Ok(out)
    }

    /// `lambda_u(t) = sum_p g_u^p(t)`, summed in product order.
    pub fn total_intensity(&self, params: &ModelParams, user: usize) -> Result<f64> {
        self.check(params)?;
        params.check_user(user)?;
        Ok((0..self.n_products)
            .map(|p| self.tendency_unchecked(params, user, p))
            .sum())
    }

    /// `sum_u lambda_u(t)` via the source-side factorization
    /// `sum_u mu_u + sum_j B_j sum_u alpha_{j u}`.
    pub fn aggregate_intensity(&self, base_total: f64, out_weights: &[f64]) -> f64 {
        base_total
            + self
                .b_total
                .iter()
                .zip(out_weights)
                .map(|(b, w)| b * w)
                .sum::<f64>()
    }

    /// Mark density `f_u(.|t)` at the current time.
    pub fn mark_density(&self, params: &ModelParams, user: usize) -> Result<Vec<f64>> {
        let g = self.tendencies(params, user)?;
        let mut out = vec![0.0; self.n_products];
        params
            .mark()
            .density_into(&g, &mut out)
            .ok_or(Error::UndefinedMark { user })?;
        Ok(out)
    }
}

/// `int_0^{t_end} lambda_u(s) ds` in closed form.
pub fn compensator(log: &EventLog, params: &ModelParams, user: usize, t_end: f64) -> Result<f64> {
    compensator_between(log, params, user, 0.0, t_end)
}

/// `int_{start}^{end} lambda_u(s) ds` given every event of `log` as history.
pub fn compensator_between(
    log: &EventLog,
    params: &ModelParams,
    user: usize,
    start: f64,
    end: f64,
) -> Result<f64> {
    params.check_log(log)?;
    params.check_user(user)?;
    if !(start <= end) {
        return Err(Error::InvalidConfig(format!(
            "compensator window [{start}, {end}] is reversed"
        )));
    }
    let mut total = params.base_rate(user) * (end - start);
    for e in log.before(end) {
        let a = params.alpha(e.user, user);
        if a != 0.0 {
            let from = start.max(e.time);
            total += a * ((-(from - e.time)).exp() - (-(end - e.time)).exp());
        }
    }
    Ok(total)
}
