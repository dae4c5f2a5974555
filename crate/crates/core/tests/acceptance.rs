//! Acceptance gate: runs every criterion at its stated tolerance and prints one
//! PASS/FAIL line each. Exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cascades::diagnostics::{ks_exponential, rescaled_gaps, welch_t_test};
use cascades::experiments::{
    counts_between, incentive_params, random_params, run_incentivization, run_recovery, IncentiveConfig, RecoveryConfig,
};
use cascades::inference::{fit_all, fit_all_with, FitConfig, Parallelism};
use cascades::io::{format_event_log, format_params};
use cascades::likelihood::{total_nll, user_nll_gradient, EventFeatures, UserParams};
use cascades::metrics::{avg_pred_loglik, compare_models, CurveKey};
use cascades::model::{Event, EventLog, MarkModel, ModelParams};
use cascades::simulation::{binned_intensity_window, simulate, simulate_count, SimConfig};
use common::{brute_total_nll, random_instance};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn instances() -> Vec<(EventLog, ModelParams)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20160501);
    (0..50).map(|_| random_instance(&mut rng)).collect()
}

fn likelihood_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (log, params) in instances() {
        let fast = total_nll(&log, &params).unwrap();
        let slow = brute_total_nll(&log, &params);
        worst = worst.max((fast - slow).abs() / slow.abs().max(1e-300));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-10 && secs < 10.0,
        detail: format!("max relative error {worst:.2e} over 50 logs, {secs:.2}s"),
    }
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (log, params) in instances() {
        let MarkModel::SoftMax { beta } = params.mark() else { unreachable!() };
        for u in 0..log.n_users() {
            let theta = UserParams::from_model(&params, u);
            let grad = user_nll_gradient(&log, u, &theta, beta).unwrap();
            let features = EventFeatures::build(&log, u).unwrap();
            let x = theta.pack();
            for k in 0..x.len() {
                let h = 1e-6 * x[k].abs().max(1.0);
                let (mut plus, mut minus) = (x.clone(), x.clone());
                plus[k] += h;
                minus[k] -= h;
                let mark = params.mark();
                let fd = (features.nll(&plus, &mark).unwrap() - features.nll(&minus, &mark).unwrap()) / (2.0 * h);
                worst = worst.max((fd - grad[k]).abs() / grad[k].abs().max(1.0));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-4 && secs < 30.0,
        detail: format!("max relative deviation {worst:.2e}, {secs:.2}s"),
    }
}

fn convexity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut violations, mut chords) = (0usize, 0usize);
    for (log, params) in instances() {
        let mark = params.mark();
        for u in 0..log.n_users() {
            let features = EventFeatures::build(&log, u).unwrap();
            let dim = features.dim();
            for _ in 0..200 {
                let a: Vec<f64> = (0..dim).map(|_| rng.random_range(1e-3..2.0)).collect();
                let b: Vec<f64> = (0..dim).map(|_| rng.random_range(1e-3..2.0)).collect();
                let (fa, fb) = (features.nll(&a, &mark).unwrap(), features.nll(&b, &mark).unwrap());
                for t in [0.25, 0.5, 0.75] {
                    let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
                    chords += 1;
                    if features.nll(&mid, &mark).unwrap() > t * fa + (1.0 - t) * fb + 1e-9 {
                        violations += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations in {chords} chord tests"),
    }
}

fn parameter_recovery() -> Outcome {
    let start = Instant::now();
    let outcome = run_recovery(&RecoveryConfig::default()).unwrap();
    let rows = &outcome.rows;
    let (first, last) = (rows[0].errors.mse, rows[rows.len() - 1].errors.mse);
    let violations = rows
        .windows(2)
        .filter(|w| w[1].avg_pred_loglik > w[0].avg_pred_loglik)
        .count();
    let secs = start.elapsed().as_secs_f64();
    let nll: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.avg_pred_loglik)).collect();
    Outcome {
        pass: last <= 0.5 * first && violations <= 2 && secs <= 1800.0,
        detail: format!(
            "mse {first:.3e} -> {last:.3e}; avg pred nll [{}], {violations}/9 increases; {secs:.0}s",
            nll.join(", ")
        ),
    }
}

fn incentivization() -> Outcome {
    let base = IncentiveConfig::default();
    let (pre, post) = ((20.0, base.switch_time), (base.switch_time, base.horizon - 20.0));
    let boosted = base.boosted_product;
    let n_models = 1 + base.betas.len();
    let mut dominated = 0;
    let mut flatter = 0;
    // pooled bins per model and product: (pre, post)
    let mut bins = vec![vec![(Vec::new(), Vec::new()); 3]; n_models];
    for seed in 0..10 {
        let outcome = run_incentivization(&IncentiveConfig {
            seed: 1000 + seed,
            ..base.clone()
        })
        .unwrap();
        let ratio = |label: &str| {
            let run = outcome.runs.iter().find(|r| r.label == label).unwrap();
            let c = counts_between(&run.log, base.switch_time, base.horizon);
            let (lo, hi) = (*c.iter().min().unwrap(), *c.iter().max().unwrap());
            if lo == 0 { f64::INFINITY } else { hi as f64 / lo as f64 }
        };
        let sharp = outcome.runs.iter().find(|r| r.label == "correlated_beta_100").unwrap();
        let c = counts_between(&sharp.log, base.switch_time, base.horizon);
        if (0..3).all(|p| p == boosted || c[boosted] > c[p]) {
            dominated += 1;
        }
        if ratio("correlated_beta_0.1") < ratio("correlated_beta_100") {
            flatter += 1;
        }
        for (i, run) in outcome.runs.iter().enumerate() {
            let a = binned_intensity_window(&run.log, pre.0, pre.1, base.bin_width, true).unwrap();
            let b = binned_intensity_window(&run.log, post.0, post.1, base.bin_width, true).unwrap();
            for p in 0..3 {
                bins[i][p].0.extend(a[p].present());
                bins[i][p].1.extend(b[p].present());
            }
        }
    }
    let mut independent_flat = true;
    let mut correlated_moved = true;
    let mut pvals = Vec::new();
    for (i, model_bins) in bins.iter().enumerate() {
        for (p, (a, b)) in model_bins.iter().enumerate() {
            if p == boosted {
                continue;
            }
            let pv = welch_t_test(a, b).unwrap();
            pvals.push(format!("m{i}p{p}={pv:.1e}"));
            if i == 0 {
                independent_flat &= pv >= 0.01;
            } else {
                correlated_moved &= pv < 0.01;
            }
        }
    }
    Outcome {
        pass: dominated == 10 && flatter == 10 && independent_flat && correlated_moved,
        detail: format!(
            "(a) boosted dominates {dominated}/10; (b) flatter at beta 0.1 {flatter}/10; (c) welch p [{}]",
            pvals.join(" ")
        ),
    }
}

fn sampler_validity() -> Outcome {
    let params = ModelParams::new(
        3,
        2,
        vec![0.4, 0.2, 0.1, 0.5, 0.3, 0.3],
        vec![0.0, 0.2, 0.1, 0.1, 0.0, 0.2, 0.2, 0.1, 0.0],
        MarkModel::SoftMax { beta: 1.0 },
    )
    .unwrap();
    let log = simulate_count(&params, 99, 5000, None).unwrap();
    let ks = ks_exponential(&rescaled_gaps(&log, &params).unwrap()).unwrap();

    let poisson = ModelParams::new(3, 2, params.mu_matrix().to_vec(), vec![0.0; 9], MarkModel::SoftMax { beta: 1.0 }).unwrap();
    let horizon = 10.0;
    let expected = horizon * poisson.mu_matrix().iter().sum::<f64>();
    let runs = 1000;
    let mean = (0..runs)
        .map(|s| simulate(&poisson, &SimConfig::new(horizon, s)).unwrap().len() as f64)
        .sum::<f64>()
        / runs as f64;
    let z = (mean - expected) / (expected / runs as f64).sqrt();
    Outcome {
        pass: ks.p_value > 0.01 && z.abs() < 3.0,
        detail: format!("KS p = {:.3}; Poisson mean {mean:.3} vs {expected:.3} (z = {z:.2})", ks.p_value),
    }
}

fn determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = random_params(8, 3, 0.5, 0.1, MarkModel::SoftMax { beta: 1.0 }, &mut rng).unwrap();
    let a = format_event_log(&simulate(&params, &SimConfig::new(100.0, 11)).unwrap());
    let b = format_event_log(&simulate(&params, &SimConfig::new(100.0, 11)).unwrap());
    let log = simulate(&params, &SimConfig::new(100.0, 11)).unwrap();
    let config = FitConfig::default();
    let (p1, r1) = fit_all(&log, &config).unwrap();
    let (p2, _) = fit_all(&log, &config).unwrap();
    let (seq, rs) = fit_all_with(&log, &config, Parallelism::Sequential).unwrap();
    let (par, rp) = fit_all_with(&log, &config, Parallelism::Workers(4)).unwrap();
    let logs_equal = a == b;
    let fits_equal = format_params(&p1).unwrap() == format_params(&p2).unwrap();
    let schedules_equal = format_params(&seq).unwrap() == format_params(&par).unwrap()
        && format_params(&seq).unwrap() == format_params(&p1).unwrap()
        && rs.same_outcome(&rp)
        && rs.same_outcome(&r1);
    Outcome {
        pass: logs_equal && fits_equal && schedules_equal,
        detail: format!(
            "logs identical: {logs_equal}; parameter files identical: {fits_equal}; sequential = parallel: {schedules_equal}"
        ),
    }
}

fn shuffle_marks<R: Rng>(log: &EventLog, rng: &mut R) -> EventLog {
    let events = log
        .events()
        .iter()
        .map(|e| Event::new(e.time, e.user, rng.random_range(0..log.n_products())))
        .collect();
    EventLog::new(log.n_users(), log.n_products(), log.horizon(), events).unwrap()
}

fn self_consistency() -> Outcome {
    let (mut pearson_wins, mut loglik_wins) = (0, 0);
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        // product preferences and a competitive beta, so marks carry information
        let scenario = IncentiveConfig {
            n_users: 10,
            ..IncentiveConfig::default()
        };
        let truth = incentive_params(&scenario, &mut rng)
            .unwrap()
            .with_mark(MarkModel::SoftMax { beta: 5.0 })
            .unwrap();
        let train = simulate(&truth, &SimConfig::new(50.0, seed)).unwrap();
        let test = simulate(&truth, &SimConfig::new(150.0, seed + 100).with_history(train.clone())).unwrap();
        let generated = simulate(&truth, &SimConfig::new(150.0, seed + 200).with_history(train.clone())).unwrap();
        let control = shuffle_marks(&generated, &mut rng);
        let cmp = compare_models(
            &test,
            &[("model".into(), generated), ("control".into(), control)],
            50.0,
            1.0,
        )
        .unwrap();
        let score = |i: usize| cmp[i].row(CurveKey::Pooled).unwrap().pearson.unwrap_or(f64::NEG_INFINITY);
        if score(0) > score(1) {
            pearson_wins += 1;
        }

        let mut mu = truth.mu_matrix().to_vec();
        let mut alpha = truth.alpha_matrix().to_vec();
        mu.shuffle(&mut rng);
        alpha.shuffle(&mut rng);
        let shuffled = ModelParams::new(10, 3, mu, alpha, truth.mark()).unwrap();
        if avg_pred_loglik(&train, &test, &truth).unwrap() < avg_pred_loglik(&train, &test, &shuffled).unwrap() {
            loglik_wins += 1;
        }
    }
    Outcome {
        pass: pearson_wins >= 8 && loglik_wins >= 8,
        detail: format!("pooled pearson beats mark-shuffled {pearson_wins}/10; avg pred loglik beats shuffled {loglik_wins}/10"),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("likelihood oracle", likelihood_oracle),
        ("gradient check", gradient_check),
        ("convexity suite", convexity_suite),
        ("parameter recovery", parameter_recovery),
        ("incentivization", incentivization),
        ("sampler validity", sampler_validity),
        ("determinism and parallel equivalence", determinism),
        ("self-consistency substitute for real data", self_consistency),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {}: {status}  {name}: {}", i + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
