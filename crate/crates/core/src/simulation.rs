//! Ogata thinning sampler, the incentivization scenario, and curve extraction.
//!
//! Between events every intensity only decays, so the aggregate intensity just
//! after the current time bounds it until the next event. Each proposal draws an
//! exponential gap at that bound and accepts with probability
//! `lambda(s + gap) / bound`; accepted points are assigned a user proportionally to
//! the per-user intensities and a product from the user's mark density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::metrics::CurveSeries;
use crate::model::{DecayState, Event, EventLog, MarkModel, ModelParams};

pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub seed: u64,
    /// Events absorbed before sampling starts; sampling begins at this log's horizon
    /// and the returned log holds only the new events.
    pub initial_history: Option<EventLog>,
    pub max_events: usize,
}

impl SimConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            initial_history: None,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    pub fn with_history(mut self, history: EventLog) -> Self {
        self.initial_history = Some(history);
        self
    }

    fn validate(&self, params: &ModelParams) -> Result<f64> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon {} must be positive", self.horizon)));
        }
        if self.max_events == 0 {
            return Err(Error::InvalidConfig("max_events must be positive".into()));
        }
        let start = match &self.initial_history {
            Some(h) => {
                params.check_log(h)?;
                h.horizon()
            }
            None => 0.0,
        };
        if start > self.horizon {
            return Err(Error::InvalidConfig(format!(
                "history ends at {start}, after the horizon {}",
                self.horizon
            )));
        }
        Ok(start)
    }
}

/// Draws an index from a probability vector.
pub fn sample_mark<R: Rng + ?Sized>(density: &[f64], rng: &mut R) -> usize {
    let target: f64 = rng.random::<f64>() * density.iter().sum::<f64>();
    let mut acc = 0.0;
    for (p, &f) in density.iter().enumerate() {
        acc += f;
        if target < acc {
            return p;
        }
    }
    // Rounding left the target at the very top; take the last positive entry.
    density.iter().rposition(|&f| f > 0.0).unwrap_or(density.len() - 1)
}

fn warn_if_supercritical(params: &ModelParams) {
    let w = params.max_in_weight();
    if w >= 1.0 {
        log::warn!(
            "max in-weight sum_j alpha_ju = {w:.3} >= 1: the process is not subcritical and may explode"
        );
    }
}

/// Thinning sampler with its own generator and decay state.
pub struct Sampler {
    state: DecayState,
    rng: ChaCha8Rng,
    events: Vec<Event>,
    max_events: usize,
    lambdas: Vec<f64>,
    tendencies: Vec<f64>,
    density: Vec<f64>,
}

impl Sampler {
    pub fn new(
        n_users: usize,
        n_products: usize,
        seed: u64,
        history: Option<&EventLog>,
        max_events: usize,
    ) -> Result<Self> {
        let mut state = DecayState::new(n_users, n_products)?;
        if let Some(h) = history {
            for e in h.events() {
                state.advance_and_absorb(e)?;
            }
            state.advance_to(h.horizon())?;
        }
        Ok(Self {
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: Vec::new(),
            max_events,
            lambdas: vec![0.0; n_users],
            tendencies: vec![0.0; n_products],
            density: vec![0.0; n_products],
        })
    }

    pub fn current_time(&self) -> f64 {
        self.state.current_time()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Samples under `params` until `until` or until `stop_after` new events exist.
    /// Returns `false` when the event cap was hit.
    pub fn run(&mut self, params: &ModelParams, until: f64, stop_after: Option<usize>) -> Result<bool> {
        let n = params.n_users();
        let base_total: f64 = (0..n).map(|u| params.base_rate(u)).sum();
        let out_weights = params.out_weights();
        loop {
            if stop_after.is_some_and(|k| self.events.len() >= k) {
                return Ok(true);
            }
            if self.events.len() >= self.max_events {
                return Ok(false);
            }
            let bound = self.state.aggregate_intensity(base_total, &out_weights);
            if !(bound > 0.0) {
                if until.is_finite() {
                    self.state.advance_to(until)?;
                }
                return Ok(true);
            }
            let gap: f64 = Exp1.sample(&mut self.rng);
            let next = self.state.current_time() + gap / bound;
            if next > until {
                self.state.advance_to(until)?;
                return Ok(true);
            }
            self.state.advance_to(next)?;
            let lambda = self.state.aggregate_intensity(base_total, &out_weights);
            let accept: f64 = self.rng.random();
            if accept * bound > lambda {
                continue;
            }

            let mut total = 0.0;
            for u in 0..n {
                let mut l = params.base_rate(u);
                for j in 0..n {
                    l += params.alpha(j, u) * self.state.b_total(j);
                }
                self.lambdas[u] = l;
                total += l;
            }
            let pick: f64 = self.rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut user = None;
            for (u, &l) in self.lambdas.iter().enumerate() {
                acc += l;
                if pick < acc {
                    user = Some(u);
                    break;
                }
            }
            let user = user
                .or_else(|| self.lambdas.iter().rposition(|&l| l > 0.0))
                .expect("positive aggregate intensity implies a user with positive intensity");

            self.state.tendencies_into(params, user, &mut self.tendencies)?;
            params
                .mark()
                .density_into(&self.tendencies, &mut self.density)
                .ok_or(Error::UndefinedMark { user })?;
            let product = sample_mark(&self.density, &mut self.rng);
            let event = Event::new(next, user, product);
            self.state.absorb(&event)?;
            self.events.push(event);
        }
    }
}

fn finish(n: usize, m: usize, horizon: f64, events: Vec<Event>, completed: bool, cap: usize) -> Result<EventLog> {
    let log = EventLog::new(n, m, horizon, events)?;
    if completed {
        Ok(log)
    } else {
        Err(Error::CapExceeded {
            cap,
            partial: Box::new(log),
        })
    }
}

/// Samples the process on `[start, horizon]`, where `start` is the end of the
/// optional initial history (otherwise 0).
pub fn simulate(params: &ModelParams, config: &SimConfig) -> Result<EventLog> {
    config.validate(params)?;
    warn_if_supercritical(params);
    let (n, m) = (params.n_users(), params.n_products());
    let mut sampler = Sampler::new(n, m, config.seed, config.initial_history.as_ref(), config.max_events)?;
    let completed = sampler.run(params, config.horizon, None)?;
    finish(n, m, config.horizon, sampler.into_events(), completed, config.max_events)
}

/// Samples exactly `n_events` new events (after the optional history). The returned
/// log's horizon is the time of its last event.
pub fn simulate_count(
    params: &ModelParams,
    seed: u64,
    n_events: usize,
    history: Option<&EventLog>,
) -> Result<EventLog> {
    warn_if_supercritical(params);
    let (n, m) = (params.n_users(), params.n_products());
    if let Some(h) = history {
        params.check_log(h)?;
    }
    let mut sampler = Sampler::new(n, m, seed, history, n_events)?;
    sampler.run(params, f64::INFINITY, Some(n_events))?;
    let events = sampler.into_events();
    if events.len() < n_events {
        return Err(Error::InvalidParams(format!(
            "process died out after {} of {n_events} events",
            events.len()
        )));
    }
    let horizon = events
        .last()
        .map(|e| e.time)
        .unwrap_or_else(|| history.map_or(0.0, |h| h.horizon()));
    EventLog::new(n, m, horizon, events)
}

/// Baseline boost applied to one product at a switch time, optionally changing
/// the mark model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub switch_time: f64,
    pub boosted_product: usize,
    pub boost_factor: f64,
    pub pre_switch_mark: MarkModel,
    pub post_switch_mark: MarkModel,
}

impl Scenario {
    /// Doubles `product`'s baseline at `switch_time`; the history before the switch
    /// comes from the independent (linear) model.
    pub fn incentivize(switch_time: f64, product: usize, post_switch_mark: MarkModel) -> Self {
        Self {
            switch_time,
            boosted_product: product,
            boost_factor: 2.0,
            pre_switch_mark: MarkModel::Linear,
            post_switch_mark,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub log: EventLog,
    pub switch_time: f64,
    pub boosted_product: usize,
    pub boost_factor: f64,
    /// Number of events strictly before the switch.
    pub pre_switch_events: usize,
}

/// Runs `scenario`: pre-switch mark until the switch, then the boosted baseline and
/// post-switch mark until the horizon. The decay state carries across the switch.
pub fn run_scenario(params: &ModelParams, scenario: &Scenario, config: &SimConfig) -> Result<ScenarioRun> {
    let start = config.validate(params)?;
    if !(scenario.switch_time > start && scenario.switch_time < config.horizon) {
        return Err(Error::InvalidConfig(format!(
            "switch time {} must lie inside ({start}, {})",
            scenario.switch_time, config.horizon
        )));
    }
    let pre = params.with_mark(scenario.pre_switch_mark)?;
    let mut post = params.with_mark(scenario.post_switch_mark)?;
    post.scale_product_baseline(scenario.boosted_product, scenario.boost_factor)?;
    warn_if_supercritical(params);

    let (n, m) = (params.n_users(), params.n_products());
    let mut sampler = Sampler::new(n, m, config.seed, config.initial_history.as_ref(), config.max_events)?;
    let completed = if pre == post {
        // Nothing changes at the switch, so the proposal stream need not restart.
        sampler.run(&pre, config.horizon, None)?
    } else {
        sampler.run(&pre, scenario.switch_time, None)? && sampler.run(&post, config.horizon, None)?
    };
    let events = sampler.into_events();
    let pre_switch_events = events.partition_point(|e| e.time < scenario.switch_time);
    let log = finish(n, m, config.horizon, events, completed, config.max_events)?;
    Ok(ScenarioRun {
        log,
        switch_time: scenario.switch_time,
        boosted_product: scenario.boosted_product,
        boost_factor: scenario.boost_factor,
        pre_switch_events,
    })
}

/// Cumulative market share `N^p(0, t] / sum_q N^q(0, t]` per product at each grid
/// point; missing while no event has occurred.
pub fn market_share(log: &EventLog, grid: &[f64]) -> Result<Vec<CurveSeries>> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig("market share grid must be strictly increasing".into()));
    }
    let m = log.n_products();
    let mut counts = vec![0usize; m];
    let mut values = vec![Vec::with_capacity(grid.len()); m];
    let mut next = 0;
    let events = log.events();
    for &t in grid {
        while next < events.len() && events[next].time <= t {
            counts[events[next].product] += 1;
            next += 1;
        }
        let total: usize = counts.iter().sum();
        for p in 0..m {
            values[p].push((total > 0).then(|| counts[p] as f64 / total as f64));
        }
    }
    let widths = point_widths(grid);
    values
        .into_iter()
        .enumerate()
        .map(|(p, v)| CurveSeries::new(format!("product_{p}"), grid.to_vec(), widths.clone(), v))
        .collect()
}

fn point_widths(grid: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(&last) = w.last() {
        w.push(last);
    } else if !grid.is_empty() {
        w.push(1.0);
    }
    w
}

/// Binned event rate over `[0, horizon]`.
pub fn binned_intensity(log: &EventLog, bin_width: f64, by_product: bool) -> Result<Vec<CurveSeries>> {
    binned_intensity_window(log, 0.0, log.horizon(), bin_width, by_product)
}

/// Event counts per bin of `[start, end]` divided by the bin width; the last bin may
/// be partial and is normalized by its true width. With `by_product` one series per
/// product is returned, otherwise a single total series equal to their sum.
pub fn binned_intensity_window(
    log: &EventLog,
    start: f64,
    end: f64,
    bin_width: f64,
    by_product: bool,
) -> Result<Vec<CurveSeries>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidConfig(format!("bin width {bin_width} must be positive")));
    }
    if !(end > start) {
        return Err(Error::InvalidConfig(format!("window [{start}, {end}] is empty")));
    }
    let n_bins = (((end - start) / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..n_bins).map(|i| start + i as f64 * bin_width).collect();
    let widths: Vec<f64> = grid
        .iter()
        .map(|&g| (g + bin_width).min(end) - g)
        .collect();
    let m = log.n_products();
    let mut counts = vec![vec![0usize; n_bins]; m];
    for e in log.events() {
        if e.time < start || e.time > end {
            continue;
        }
        let bin = (((e.time - start) / bin_width) as usize).min(n_bins - 1);
        counts[e.product][bin] += 1;
    }
    let per_product: Vec<Vec<f64>> = counts
        .iter()
        .map(|c| c.iter().zip(&widths).map(|(&k, &w)| k as f64 / w).collect())
        .collect();
    if by_product {
        per_product
            .into_iter()
            .enumerate()
            .map(|(p, v)| {
                CurveSeries::new(
                    format!("product_{p}"),
                    grid.clone(),
                    widths.clone(),
                    v.into_iter().map(Some).collect(),
                )
            })
            .collect()
    } else {
        let total: Vec<Option<f64>> = (0..n_bins)
            .map(|b| Some(per_product.iter().map(|v| v[b]).sum()))
            .collect();
        Ok(vec![CurveSeries::new("all".into(), grid, widths, total)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params(mark: MarkModel) -> ModelParams {
        ModelParams::new(
            2,
            2,
            vec![0.3, 0.2, 0.1, 0.4],
            vec![0.2, 0.1, 0.3, 0.25],
            mark,
        )
        .unwrap()
    }

    #[test]
    fn zero_params_give_empty_log() {
        let p = ModelParams::zeros(3, 2, MarkModel::SoftMax { beta: 1.0 }).unwrap();
        let log = simulate(&p, &SimConfig::new(100.0, 7)).unwrap();
        assert!(log.is_empty());
        assert_eq!(log.horizon(), 100.0);
    }

    #[test]
    fn simulation_is_seed_deterministic_and_sorted() {
        let p = small_params(MarkModel::SoftMax { beta: 2.0 });
        let a = simulate(&p, &SimConfig::new(50.0, 11)).unwrap();
        let b = simulate(&p, &SimConfig::new(50.0, 11)).unwrap();
        let c = simulate(&p, &SimConfig::new(50.0, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.events().windows(2).all(|w| w[0].time <= w[1].time));
        assert!(!a.is_empty());
    }

    #[test]
    fn cap_reports_partial_log() {
        let p = small_params(MarkModel::Linear);
        let cfg = SimConfig {
            max_events: 5,
            ..SimConfig::new(1e4, 3)
        };
        match simulate(&p, &cfg) {
            Err(Error::CapExceeded { cap, partial }) => {
                assert_eq!(cap, 5);
                assert_eq!(partial.len(), 5);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn count_mode_is_a_prefix_of_horizon_mode() {
        let p = small_params(MarkModel::SoftMax { beta: 1.0 });
        let long = simulate(&p, &SimConfig::new(200.0, 5)).unwrap();
        let counted = simulate_count(&p, 5, 20, None).unwrap();
        assert_eq!(counted.events(), &long.events()[..20]);
        assert_eq!(counted.horizon(), counted.events()[19].time);
    }

    #[test]
    fn history_is_respected() {
        let p = small_params(MarkModel::Linear);
        let hist = simulate(&p, &SimConfig::new(10.0, 1)).unwrap();
        let cont = simulate(&p, &SimConfig::new(20.0, 2).with_history(hist.clone())).unwrap();
        assert!(cont.events().iter().all(|e| e.time >= 10.0));
        let bad = SimConfig::new(5.0, 2).with_history(hist);
        assert!(simulate(&p, &bad).is_err());
    }

    #[test]
    fn neutral_scenario_matches_plain_simulation() {
        let p = small_params(MarkModel::SoftMax { beta: 1.5 });
        let cfg = SimConfig::new(80.0, 99);
        let plain = simulate(&p, &cfg).unwrap();
        let scenario = Scenario {
            switch_time: 40.0,
            boosted_product: 1,
            boost_factor: 1.0,
            pre_switch_mark: p.mark(),
            post_switch_mark: p.mark(),
        };
        let run = run_scenario(&p, &scenario, &cfg).unwrap();
        assert_eq!(run.log, plain);
        assert_eq!(run.pre_switch_events, plain.before(40.0).len());
    }

    #[test]
    fn scenario_rejects_switch_outside_window() {
        let p = small_params(MarkModel::Linear);
        let s = Scenario::incentivize(120.0, 1, MarkModel::Linear);
        assert!(run_scenario(&p, &s, &SimConfig::new(100.0, 1)).is_err());
    }

    #[test]
    fn market_share_examples() {
        let log = EventLog::new(
            1,
            2,
            4.0,
            vec![Event::new(1.0, 0, 0), Event::new(2.0, 0, 1), Event::new(3.0, 0, 1)],
        )
        .unwrap();
        let shares = market_share(&log, &[0.5, 3.0]).unwrap();
        assert_eq!(shares[0].values[0], None);
        assert_eq!(shares[1].values[0], None);
        assert!((shares[0].values[1].unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((shares[1].values[1].unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let single = EventLog::new(1, 1, 4.0, vec![Event::new(1.0, 0, 0), Event::new(2.0, 0, 0)]).unwrap();
        let s = market_share(&single, &[0.5, 1.0, 2.5, 4.0]).unwrap();
        assert_eq!(s[0].values, vec![None, Some(1.0), Some(1.0), Some(1.0)]);
    }

    #[test]
    fn binned_intensity_examples() {
        let empty = EventLog::empty(1, 2, 5.0).unwrap();
        let series = binned_intensity(&empty, 1.0, true).unwrap();
        assert!(series.iter().all(|s| s.values.iter().all(|v| *v == Some(0.0))));

        let events = (0..10).map(|i| Event::new(i as f64 + 0.5, 0, i % 2)).collect();
        let log = EventLog::new(1, 2, 10.0, events).unwrap();
        let total = binned_intensity(&log, 1.0, false).unwrap();
        assert_eq!(total[0].values.len(), 10);
        assert!(total[0].values.iter().all(|v| *v == Some(1.0)));

        let parts = binned_intensity(&log, 0.75, true).unwrap();
        let total = binned_intensity(&log, 0.75, false).unwrap();
        for b in 0..total[0].values.len() {
            let sum: f64 = parts.iter().map(|s| s.values[b].unwrap()).sum();
            assert_eq!(sum, total[0].values[b].unwrap());
        }
        // last partial bin [9.75, 10] holds no events; width 0.25
        assert!((total[0].widths.last().unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sample_mark_respects_zero_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(sample_mark(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }
}
