#![allow(dead_code)]

use cascades::model::{Event, EventLog, MarkModel, ModelParams};
use rand::Rng;

/// A small random log with occasional exact ties.
pub fn random_log<R: Rng>(rng: &mut R, n: usize, m: usize, k: usize, horizon: f64) -> EventLog {
    let mut times: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * horizon).collect();
    times.sort_by(f64::total_cmp);
    for i in 1..times.len() {
        if rng.random::<f64>() < 0.1 {
            times[i] = times[i - 1];
        }
    }
    let events = times
        .into_iter()
        .map(|t| Event::new(t, rng.random_range(0..n), rng.random_range(0..m)))
        .collect();
    EventLog::new(n, m, horizon, events).unwrap()
}

pub fn random_params<R: Rng>(rng: &mut R, n: usize, m: usize, mark: MarkModel) -> ModelParams {
    let mu = (0..n * m).map(|_| rng.random_range(0.05..1.0)).collect();
    let alpha = (0..n * n).map(|_| rng.random_range(0.0..0.5)).collect();
    ModelParams::new(n, m, mu, alpha, mark).unwrap()
}

/// A random small instance of the family used by the likelihood checks:
/// `N <= 5`, `M <= 3`, `K <= 30`.
pub fn random_instance<R: Rng>(rng: &mut R) -> (EventLog, ModelParams) {
    let n = rng.random_range(1..=5);
    let m = rng.random_range(1..=3);
    let k = rng.random_range(0..=30);
    let horizon = rng.random_range(2.0..10.0);
    let log = random_log(rng, n, m, k, horizon);
    let beta = rng.random_range(0.1..5.0);
    let params = random_params(rng, n, m, MarkModel::SoftMax { beta });
    (log, params)
}

/// Tendencies of `user` at `t` by summing over every earlier event.
pub fn brute_tendencies(log: &EventLog, params: &ModelParams, user: usize, t: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..params.n_products()).map(|p| params.mu(user, p)).collect();
    for e in log.events().iter().filter(|e| e.time < t) {
        g[e.product] += params.alpha(e.user, user) * (-(t - e.time)).exp();
    }
    g
}

fn brute_log_mark(g: &[f64], p: usize, mark: MarkModel) -> f64 {
    match mark {
        MarkModel::Linear => (g[p] / g.iter().sum::<f64>()).ln(),
        MarkModel::SoftMax { beta } => {
            let top = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = g.iter().map(|v| (beta * (v - top)).exp()).sum();
            beta * (g[p] - top) - z.ln()
        }
    }
}

/// Negative log-likelihood of the whole log, from full-history rescans at every
/// event and the survival integral accumulated gap by gap.
pub fn brute_total_nll(log: &EventLog, params: &ModelParams) -> f64 {
    let n = params.n_users();
    let mut ll = 0.0;
    for e in log.events() {
        let g = brute_tendencies(log, params, e.user, e.time);
        let lambda: f64 = g.iter().sum();
        ll += lambda.ln() + brute_log_mark(&g, e.product, params.mark());
    }
    let base: f64 = (0..n).map(|u| (0..params.n_products()).map(|p| params.mu(u, p)).sum::<f64>()).sum();
    let mut cuts: Vec<f64> = vec![0.0];
    cuts.extend(log.events().iter().map(|e| e.time));
    cuts.push(log.horizon());
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mut integral = base * (b - a);
        for e in log.events().iter().filter(|e| e.time <= a) {
            let out: f64 = (0..n).map(|u| params.alpha(e.user, u)).sum();
            integral += out * ((-(a - e.time)).exp() - (-(b - e.time)).exp());
        }
        ll -= integral;
    }
    -ll
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
