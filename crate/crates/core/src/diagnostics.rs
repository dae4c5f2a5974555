//! Goodness-of-fit helpers: time rescaling, a Kolmogorov-Smirnov test against the
//! unit exponential, and Welch's two-sample t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{DecayState, EventLog, ModelParams};

/// Integrated aggregate intensity over every interevent gap (the first gap starts
/// at 0). Under the true model these are i.i.d. Exponential(1).
pub fn rescaled_gaps(log: &EventLog, params: &ModelParams) -> Result<Vec<f64>> {
    params.check_log(log)?;
    let n = params.n_users();
    let base: f64 = (0..n).map(|u| params.base_rate(u)).sum();
    let out = params.out_weights();
    let mut state = DecayState::for_params(params);
    let mut gaps = Vec::with_capacity(log.len());
    for e in log.events() {
        let dt = e.time - state.current_time();
        let excited: f64 = state.b_totals().iter().zip(&out).map(|(b, w)| b * w).sum();
        gaps.push(base * dt + excited * (-(-dt).exp_m1()));
        state.advance_and_absorb(e)?;
    }
    Ok(gaps)
}

/// Result of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of `samples` against the distribution with CDF `cdf`. The p-value uses
/// the asymptotic distribution with Stephens' small-sample correction.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("KS test needs samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sqrt_n = n.sqrt();
    let p_value = kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    Ok(KsOutcome {
        statistic: d,
        p_value,
    })
}

pub fn ks_exponential(samples: &[f64]) -> Result<KsOutcome> {
    ks_test(samples, |x| if x <= 0.0 { 0.0 } else { -(-x).exp_m1() })
}

/// Two-sided p-value of Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::EmptyInput("welch test needs two points per sample"));
    }
    let moments = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, var)
    };
    let (na, ma, va) = moments(a);
    let (nb, mb, vb) = moments(b);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return Ok(if ma == mb { 1.0 } else { 0.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|_| Error::UndefinedMetric("welch degrees of freedom"))?;
    Ok((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}
