mod common;

use cascades::diagnostics::{ks_exponential, rescaled_gaps};
use cascades::io::format_event_log;
use cascades::model::{DecayState, Event, EventLog, MarkModel, ModelParams};
use cascades::simulation::{
    binned_intensity, market_share, run_scenario, sample_mark, simulate, Scenario, SimConfig,
};
use cascades::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_user(mark: MarkModel) -> ModelParams {
    ModelParams::new(2, 2, vec![3.0, 2.0, 2.0, 3.0], vec![0.2, 0.4, 0.3, 0.1], mark).unwrap()
}

#[test]
fn zero_parameters_give_an_empty_log() {
    let params = ModelParams::zeros(3, 2, MarkModel::SoftMax { beta: 1.0 }).unwrap();
    let log = simulate(&params, &SimConfig::new(10.0, 1)).unwrap();
    assert!(log.is_empty());
    assert_eq!(log.horizon(), 10.0);
}

#[test]
fn same_seed_same_bytes() {
    let params = two_user(MarkModel::SoftMax { beta: 2.0 });
    let a = simulate(&params, &SimConfig::new(20.0, 42)).unwrap();
    let b = simulate(&params, &SimConfig::new(20.0, 42)).unwrap();
    let c = simulate(&params, &SimConfig::new(20.0, 43)).unwrap();
    assert_eq!(format_event_log(&a), format_event_log(&b));
    assert_ne!(format_event_log(&a), format_event_log(&c));
}

#[test]
fn neutral_scenario_is_plain_simulation() {
    let params = two_user(MarkModel::SoftMax { beta: 2.0 });
    let scenario = Scenario {
        switch_time: 5.0,
        boosted_product: 1,
        boost_factor: 1.0,
        pre_switch_mark: params.mark(),
        post_switch_mark: params.mark(),
    };
    let run = run_scenario(&params, &scenario, &SimConfig::new(10.0, 9)).unwrap();
    assert_eq!(run.log, simulate(&params, &SimConfig::new(10.0, 9)).unwrap());
}

#[test]
fn history_conditioning_returns_only_new_events() {
    let params = two_user(MarkModel::Linear);
    let history = simulate(&params, &SimConfig::new(5.0, 1)).unwrap();
    let more = simulate(&params, &SimConfig::new(8.0, 2).with_history(history.clone())).unwrap();
    assert!(more.events().iter().all(|e| e.time >= 5.0 && e.time <= 8.0));
    assert!(history.concat(&more).is_ok());
}

#[test]
fn cap_is_reported_with_partial_log() {
    let params = two_user(MarkModel::Linear);
    let config = SimConfig {
        max_events: 25,
        ..SimConfig::new(100.0, 3)
    };
    match simulate(&params, &config) {
        Err(Error::CapExceeded { cap, partial }) => {
            assert_eq!(cap, 25);
            assert_eq!(partial.len(), 25);
        }
        other => panic!("expected cap error, got {other:?}"),
    }
}

#[test]
fn poisson_mean_count() {
    let params = ModelParams::new(3, 2, vec![0.3, 0.1, 0.5, 0.2, 0.4, 0.25], vec![0.0; 9], MarkModel::Linear).unwrap();
    let horizon = 5.0;
    let expected = horizon * params.mu_matrix().iter().sum::<f64>();
    let runs = 300;
    let mean = (0..runs)
        .map(|s| simulate(&params, &SimConfig::new(horizon, s)).unwrap().len() as f64)
        .sum::<f64>()
        / runs as f64;
    let se = (expected / runs as f64).sqrt();
    assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected}");
}

#[test]
fn mark_frequencies_follow_the_density() {
    let params = ModelParams::new(
        2,
        3,
        vec![0.2, 0.5, 0.3, 0.1, 0.1, 0.1],
        vec![0.0, 0.3, 0.0, 0.0],
        MarkModel::SoftMax { beta: 2.0 },
    )
    .unwrap();
    let mut state = DecayState::for_params(&params);
    state.advance_and_absorb(&Event::new(1.0, 0, 2)).unwrap();
    state.advance_to(1.5).unwrap();
    let density = state.mark_density(&params, 1).unwrap();
    let draws = 100_000;
    let mut counts = [0usize; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..draws {
        counts[sample_mark(&density, &mut rng)] += 1;
    }
    for p in 0..3 {
        let mean = draws as f64 * density[p];
        let sd = (draws as f64 * density[p] * (1.0 - density[p])).sqrt();
        assert!((counts[p] as f64 - mean).abs() < 3.0 * sd, "product {p}");
    }
}

#[test]
fn pooled_intensity_follows_expectation_dynamics() {
    let params = two_user(MarkModel::SoftMax { beta: 1.0 });
    let (horizon, width, runs) = (10.0, 2.0, 500);
    let mut pooled = [0.0; 5];
    for s in 0..runs {
        let log = simulate(&params, &SimConfig::new(horizon, 1000 + s)).unwrap();
        let curve = &binned_intensity(&log, width, false).unwrap()[0];
        for (acc, v) in pooled.iter_mut().zip(curve.present()) {
            *acc += v * width;
        }
    }
    // E[B_j]' = -E[B_j] + mu_j + sum_k alpha_{kj} E[B_k]; expected rate is the sum
    let dt = 1e-4;
    let mu: Vec<f64> = (0..2).map(|u| params.base_rate(u)).collect();
    let mut b = [0.0f64; 2];
    let mut expected = vec![0.0; 5];
    let steps = (horizon / dt).round() as usize;
    for i in 0..steps {
        let rates: Vec<f64> = (0..2)
            .map(|u| mu[u] + (0..2).map(|k| params.alpha(k, u) * b[k]).sum::<f64>())
            .collect();
        let t = (i as f64 + 0.5) * dt;
        expected[((t / width) as usize).min(4)] += rates.iter().sum::<f64>() * dt;
        for j in 0..2 {
            b[j] += dt * (rates[j] - b[j]);
        }
    }
    for (bin, (got, want)) in pooled.iter().zip(&expected).enumerate() {
        let got = got / runs as f64;
        if got * runs as f64 >= 100.0 {
            assert!((got - want).abs() <= 0.05 * want, "bin {bin}: {got} vs {want}");
        }
    }
}

#[test]
fn time_rescaled_gaps_are_unit_exponential() {
    let params = two_user(MarkModel::SoftMax { beta: 1.0 });
    let log = cascades::simulation::simulate_count(&params, 7, 5000, None).unwrap();
    let gaps = rescaled_gaps(&log, &params).unwrap();
    assert!(ks_exponential(&gaps).unwrap().p_value > 0.01);
}

#[test]
fn market_share_examples() {
    let log = EventLog::new(
        1,
        2,
        3.0,
        vec![Event::new(1.0, 0, 0), Event::new(2.0, 0, 1), Event::new(3.0, 0, 1)],
    )
    .unwrap();
    let shares = market_share(&log, &[0.5, 3.0]).unwrap();
    assert_eq!(shares[0].values, vec![None, Some(1.0 / 3.0)]);
    assert_eq!(shares[1].values, vec![None, Some(2.0 / 3.0)]);
}

#[test]
fn binned_total_is_sum_of_products() {
    let params = two_user(MarkModel::Linear);
    let log = simulate(&params, &SimConfig::new(7.3, 4)).unwrap();
    let parts = binned_intensity(&log, 1.0, true).unwrap();
    let total = binned_intensity(&log, 1.0, false).unwrap();
    for i in 0..total[0].len() {
        let sum: f64 = parts.iter().map(|s| s.values[i].unwrap()).sum();
        assert_eq!(total[0].values[i].unwrap(), sum);
    }
    // 10 events spread over [0, 10) at unit width
    let even = EventLog::new(1, 1, 10.0, (0..10).map(|i| Event::new(i as f64 + 0.5, 0, 0)).collect()).unwrap();
    let curve = &binned_intensity(&even, 1.0, false).unwrap()[0];
    assert!(curve.present().all(|v| v == 1.0));
}
