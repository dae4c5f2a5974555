//! Exact log-likelihood of an observed log, split into independent per-user terms.
//!
//! For target user `u` with parameters `theta_u = (alpha_{. u}, mu_u^.)` the negative
//! log-likelihood is
//!
//! ```text
//! -sum_{i in D_u} [ log lambda_u(t_i) + log f_u(p_i | t_i) ] + int_0^T lambda_u(s) ds
//! ```
//!
//! which is convex in `theta_u` for both mark models. [`EventFeatures`] caches the
//! decayed sums at the user's own event times so repeated evaluations during fitting
//! never rescan the history.

use crate::error::{Error, Result};
use crate::model::{Event, EventLog, MarkModel, ModelParams};

/// `log sum_i exp(v_i)` with max subtraction.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("log_sum_exp needs at least one value"));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        return Ok(max);
    }
    if max == f64::NEG_INFINITY {
        return Ok(max);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Parameters of a single target user.
///
/// Packed layout is `[alpha_col | mu_row]`, length `N + M`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserParams {
    pub alpha_col: Vec<f64>,
    pub mu_row: Vec<f64>,
}

impl UserParams {
    pub fn new(alpha_col: Vec<f64>, mu_row: Vec<f64>) -> Result<Self> {
        if let Some(v) = alpha_col.iter().chain(&mu_row).find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParams(format!(
                "user parameters must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self { alpha_col, mu_row })
    }

    pub fn from_model(params: &ModelParams, user: usize) -> Self {
        Self {
            alpha_col: params.alpha_column(user),
            mu_row: params.mu_row(user).to_vec(),
        }
    }

    pub fn from_packed(n_users: usize, packed: &[f64]) -> Self {
        Self {
            alpha_col: packed[..n_users].to_vec(),
            mu_row: packed[n_users..].to_vec(),
        }
    }

    pub fn pack(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.alpha_col.len() + self.mu_row.len());
        v.extend_from_slice(&self.alpha_col);
        v.extend_from_slice(&self.mu_row);
        v
    }
}

/// Decayed sums at each event of one user, plus the per-source compensator weights.
#[derive(Debug, Clone)]
pub struct EventFeatures {
    user: usize,
    n_users: usize,
    n_products: usize,
    horizon: f64,
    targets: Vec<usize>,
    /// `|D_u| x N x M`, `B_j^q(t_i)`.
    b: Vec<f64>,
    /// `|D_u| x N`, `B_j(t_i)`.
    b_total: Vec<f64>,
    /// `sum_{i: u_i = j, t_i < T} (1 - exp(-(T - t_i)))` per source `j`.
    comp_weights: Vec<f64>,
}

/// Walks a sorted log and calls `visit` with the state as seen by each group of
/// simultaneous events, before that group is absorbed.
pub(crate) fn scan_left_limits<F>(
    n_users: usize,
    n_products: usize,
    history: &[Event],
    events: &[Event],
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&crate::model::DecayState, &Event) -> Result<()>,
{
    let mut state = crate::model::DecayState::new(n_users, n_products)?;
    for e in history {
        state.advance_and_absorb(e)?;
    }
    let mut i = 0;
    while i < events.len() {
        let t = events[i].time;
        let mut end = i;
        while end < events.len() && events[end].time == t {
            end += 1;
        }
        state.advance_to(t)?;
        for e in &events[i..end] {
            visit(&state, e)?;
        }
        for e in &events[i..end] {
            state.absorb(e)?;
        }
        i = end;
    }
    Ok(())
}

fn compensator_weights(log: &EventLog) -> Vec<f64> {
    let t_end = log.horizon();
    let mut w = vec![0.0; log.n_users()];
    for e in log.before(t_end) {
        w[e.user] += -(-(t_end - e.time)).exp_m1();
    }
    w
}

impl EventFeatures {
    /// Features for every user in one pass over the log.
    pub fn build_all(log: &EventLog) -> Result<Vec<EventFeatures>> {
        let (n, m) = (log.n_users(), log.n_products());
        let weights = compensator_weights(log);
        let counts = log.user_counts();
        let mut all: Vec<EventFeatures> = (0..n)
            .map(|u| EventFeatures {
                user: u,
                n_users: n,
                n_products: m,
                horizon: log.horizon(),
                targets: Vec::with_capacity(counts[u]),
                b: Vec::with_capacity(counts[u] * n * m),
                b_total: Vec::with_capacity(counts[u] * n),
                comp_weights: weights.clone(),
            })
            .collect();
        scan_left_limits(n, m, &[], log.events(), |state, e| {
            let f = &mut all[e.user];
            f.targets.push(e.product);
            f.b.extend_from_slice(state.b_matrix());
            f.b_total.extend_from_slice(state.b_totals());
            Ok(())
        })?;
        Ok(all)
    }

    /// Features for a single user.
    pub fn build(log: &EventLog, user: usize) -> Result<EventFeatures> {
        let (n, m) = (log.n_users(), log.n_products());
        if user >= n {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: user,
                bound: n,
            });
        }
        let mut f = EventFeatures {
            user,
            n_users: n,
            n_products: m,
            horizon: log.horizon(),
            targets: Vec::new(),
            b: Vec::new(),
            b_total: Vec::new(),
            comp_weights: compensator_weights(log),
        };
        scan_left_limits(n, m, &[], log.events(), |state, e| {
            if e.user == user {
                f.targets.push(e.product);
                f.b.extend_from_slice(state.b_matrix());
                f.b_total.extend_from_slice(state.b_totals());
            }
            Ok(())
        })?;
        Ok(f)
    }

    pub fn user(&self) -> usize {
        self.user
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_products(&self) -> usize {
        self.n_products
    }

    /// Length of the packed parameter vector, `N + M`.
    pub fn dim(&self) -> usize {
        self.n_users + self.n_products
    }

    pub fn n_events(&self) -> usize {
        self.targets.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// `B_j^q(t_i)` for the `i`-th event of this user.
    pub fn b(&self, event: usize, source: usize, product: usize) -> f64 {
        self.b[(event * self.n_users + source) * self.n_products + product]
    }

    pub fn b_total(&self, event: usize, source: usize) -> f64 {
        self.b_total[event * self.n_users + source]
    }

    pub fn compensator_weights(&self) -> &[f64] {
        &self.comp_weights
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "packed parameters have length {}, expected {}",
                theta.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn tendencies_at(&self, event: usize, theta: &[f64], g: &mut [f64]) {
        let (n, m) = (self.n_users, self.n_products);
        let (alpha, mu) = theta.split_at(n);
        g.copy_from_slice(mu);
        let block = &self.b[event * n * m..(event + 1) * n * m];
        for (j, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                for (gq, &bq) in g.iter_mut().zip(&block[j * m..(j + 1) * m]) {
                    *gq += a * bq;
                }
            }
        }
    }

    fn compensator(&self, theta: &[f64]) -> f64 {
        let (alpha, mu) = theta.split_at(self.n_users);
        let base: f64 = mu.iter().sum();
        let mut c = base * self.horizon;
        for (a, w) in alpha.iter().zip(&self.comp_weights) {
            c += a * w;
        }
        c
    }

    /// Negative log-likelihood of this user's events at packed parameters `theta`.
    pub fn nll(&self, theta: &[f64], mark: &MarkModel) -> Result<f64> {
        self.evaluate(theta, mark, None)
    }

    /// Negative log-likelihood and its gradient (written into `grad`).
    pub fn nll_gradient(&self, theta: &[f64], mark: &MarkModel, grad: &mut [f64]) -> Result<f64> {
        if grad.len() != self.dim() {
            return Err(Error::ShapeMismatch("gradient buffer has wrong length".into()));
        }
        self.evaluate(theta, mark, Some(grad))
    }

    fn evaluate(&self, theta: &[f64], mark: &MarkModel, mut grad: Option<&mut [f64]>) -> Result<f64> {
        self.check_theta(theta)?;
        let (n, m) = (self.n_users, self.n_products);
        let infeasible = Error::InfeasibleLikelihood { user: self.user };
        let mut g = vec![0.0; m];
        let mut f = vec![0.0; m];
        let mut scaled = vec![0.0; m];
        if let Some(gr) = grad.as_deref_mut() {
            gr.iter_mut().for_each(|v| *v = 0.0);
        }

        let mut loglik = 0.0;
        for (i, &p) in self.targets.iter().enumerate() {
            self.tendencies_at(i, theta, &mut g);
            let block = &self.b[i * n * m..(i + 1) * n * m];
            let totals = &self.b_total[i * n..(i + 1) * n];
            match *mark {
                MarkModel::SoftMax { beta } => {
                    let lambda: f64 = g.iter().sum();
                    if !(lambda > 0.0) || !lambda.is_finite() {
                        return Err(infeasible);
                    }
                    for (s, &gq) in scaled.iter_mut().zip(&g) {
                        *s = beta * gq;
                    }
                    let lse = log_sum_exp(&scaled)?;
                    loglik += lambda.ln() + scaled[p] - lse;

                    if let Some(gr) = grad.as_deref_mut() {
                        let inv = 1.0 / lambda;
                        for (fq, &s) in f.iter_mut().zip(&scaled) {
                            *fq = (s - lse).exp();
                        }
                        let (ga, gm) = gr.split_at_mut(n);
                        for (q, gmq) in gm.iter_mut().enumerate() {
                            *gmq += -inv + beta * f[q];
                        }
                        gm[p] -= beta;
                        for (j, gaj) in ga.iter_mut().enumerate() {
                            let row = &block[j * m..(j + 1) * m];
                            let expected: f64 = row.iter().zip(&f).map(|(b, fq)| b * fq).sum();
                            *gaj += -totals[j] * inv - beta * row[p] + beta * expected;
                        }
                    }
                }
                MarkModel::Linear => {
                    let gp = g[p];
                    if !(gp > 0.0) || !gp.is_finite() {
                        return Err(infeasible);
                    }
                    loglik += gp.ln();
                    if let Some(gr) = grad.as_deref_mut() {
                        let inv = 1.0 / gp;
                        let (ga, gm) = gr.split_at_mut(n);
                        gm[p] -= inv;
                        for (j, gaj) in ga.iter_mut().enumerate() {
                            *gaj -= block[j * m + p] * inv;
                        }
                    }
                }
            }
        }

        let nll = self.compensator(theta) - loglik;
        if !nll.is_finite() {
            return Err(infeasible);
        }
        if let Some(gr) = grad {
            let (ga, gm) = gr.split_at_mut(n);
            for (gaj, w) in ga.iter_mut().zip(&self.comp_weights) {
                *gaj += w;
            }
            for gmq in gm.iter_mut() {
                *gmq += self.horizon;
            }
        }
        Ok(nll)
    }
}

/// Per-user soft-max negative log-likelihood.
pub fn user_nll(log: &EventLog, user: usize, theta: &UserParams, beta: f64) -> Result<f64> {
    let features = EventFeatures::build(log, user)?;
    features.nll(&theta.pack(), &MarkModel::SoftMax { beta })
}

/// Gradient of [`user_nll`] in the packed layout `[alpha_col | mu_row]`.
pub fn user_nll_gradient(log: &EventLog, user: usize, theta: &UserParams, beta: f64) -> Result<Vec<f64>> {
    let features = EventFeatures::build(log, user)?;
    let mut grad = vec![0.0; features.dim()];
    features.nll_gradient(&theta.pack(), &MarkModel::SoftMax { beta }, &mut grad)?;
    Ok(grad)
}

/// Per-user negative log-likelihood evaluated by a single streaming pass, without
/// caching any features. Slower per evaluation but needs only `O(N M)` memory.
pub fn user_nll_streaming(log: &EventLog, user: usize, theta: &UserParams, mark: &MarkModel) -> Result<f64> {
    let (n, m) = (log.n_users(), log.n_products());
    if user >= n {
        return Err(Error::IndexOutOfRange {
            what: "user",
            index: user,
            bound: n,
        });
    }
    if theta.alpha_col.len() != n || theta.mu_row.len() != m {
        return Err(Error::ShapeMismatch("user parameters do not match the log".into()));
    }
    let mut loglik = 0.0;
    let mut g = vec![0.0; m];
    scan_left_limits(n, m, &[], log.events(), |state, e| {
        if e.user != user {
            return Ok(());
        }
        g.copy_from_slice(&theta.mu_row);
        for (j, &a) in theta.alpha_col.iter().enumerate() {
            for (gq, &b) in g.iter_mut().zip(state.b_row(j)) {
                *gq += a * b;
            }
        }
        let lambda: f64 = g.iter().sum();
        let log_mark = mark.log_density(&g, e.product);
        match log_mark {
            Some(lm) if lambda > 0.0 => {
                loglik += lambda.ln() + lm;
                Ok(())
            }
            _ => Err(Error::InfeasibleLikelihood { user }),
        }
    })?;
    let weights = compensator_weights(log);
    let comp = theta.mu_row.iter().sum::<f64>() * log.horizon()
        + theta.alpha_col.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>();
    let nll = comp - loglik;
    if !nll.is_finite() {
        return Err(Error::InfeasibleLikelihood { user });
    }
    Ok(nll)
}

/// Negative log-likelihood of the full log, as the sum of per-user terms.
pub fn total_nll(log: &EventLog, params: &ModelParams) -> Result<f64> {
    params.check_log(log)?;
    let mark = params.mark();
    let features = EventFeatures::build_all(log)?;
    features.iter().try_fold(0.0, |acc, f| {
        let theta = UserParams::from_model(params, f.user()).pack();
        Ok(acc + f.nll(&theta, &mark)?)
    })
}

/// `int_start^end sum_u lambda_u(s) ds` with every event before `end` as history.
pub(crate) fn aggregate_compensator(events: &[Event], params: &ModelParams, start: f64, end: f64) -> f64 {
    let base: f64 = (0..params.n_users()).map(|u| params.base_rate(u)).sum();
    let out = params.out_weights();
    let mut total = base * (end - start);
    for e in events.iter().take_while(|e| e.time < end) {
        let from = start.max(e.time);
        total += out[e.user] * ((-(from - e.time)).exp() - (-(end - e.time)).exp());
    }
    total
}

/// Negative log-likelihood of `window` over `[history.horizon, window.horizon]`,
/// with intensities conditioned on all of `history` and on the preceding window
/// events.
pub fn predictive_nll(history: &EventLog, window: &EventLog, params: &ModelParams) -> Result<f64> {
    params.check_log(history)?;
    params.check_log(window)?;
    let start = history.horizon();
    let end = window.horizon();
    if let Some(e) = window.events().first() {
        if e.time < start {
            return Err(Error::InvalidLog(format!(
                "window event at {} precedes the end of the history at {start}",
                e.time
            )));
        }
    }
    if end < start {
        return Err(Error::InvalidLog(format!(
            "window horizon {end} precedes the end of the history at {start}"
        )));
    }
    if let Some(e) = history.events().last() {
        if e.time > start {
            return Err(Error::InvalidLog("history event after its own horizon".into()));
        }
    }
    let (n, m) = (params.n_users(), params.n_products());
    let mark = params.mark();
    let mut loglik = 0.0;
    let mut g = vec![0.0; m];
    scan_left_limits(n, m, history.events(), window.events(), |state, e| {
        state.tendencies_into(params, e.user, &mut g)?;
        let lambda: f64 = g.iter().sum();
        match mark.log_density(&g, e.product) {
            Some(lm) if lambda > 0.0 => {
                loglik += lambda.ln() + lm;
                Ok(())
            }
            _ => Err(Error::InfeasibleLikelihood { user: e.user }),
        }
    })?;
    let mut all = Vec::with_capacity(history.len() + window.len());
    all.extend_from_slice(history.events());
    all.extend_from_slice(window.events());
    let nll = aggregate_compensator(&all, params, start, end) - loglik;
    if !nll.is_finite() {
        return Err(Error::InfeasibleLikelihood { user: 0 });
    }
    Ok(nll)
}
