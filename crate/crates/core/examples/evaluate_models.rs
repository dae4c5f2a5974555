//! Scores the correlated and the independent model against held-out events:
//! predictive likelihood and agreement of simulated intensity curves.
//!
//! cargo run --release --example evaluate_models

use cascades::experiments::{incentive_params, IncentiveConfig};
use cascades::inference::fit_all;
use cascades::metrics::{avg_pred_loglik, compare_models, CurveKey};
use cascades::{simulate, FitConfig, MarkModel, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cascades::Result<()> {
    let scenario = IncentiveConfig {
        n_users: 15,
        ..IncentiveConfig::default()
    };
    let truth = incentive_params(&scenario, &mut ChaCha8Rng::seed_from_u64(1))?
        .with_mark(MarkModel::SoftMax { beta: 5.0 })?;
    let train = simulate(&truth, &SimConfig::new(80.0, 1))?;
    let test = simulate(&truth, &SimConfig::new(100.0, 2).with_history(train.clone()))?;
    println!("train {} events, test {} events", train.len(), test.len());

    let mut generated = Vec::new();
    for (label, mark) in [("correlated", MarkModel::SoftMax { beta: 5.0 }), ("independent", MarkModel::Linear)] {
        let (fitted, _) = fit_all(&train, &FitConfig { mark, ..FitConfig::default() })?;
        println!("{label:<12} avg pred nll {:.4}", avg_pred_loglik(&train, &test, &fitted)?);
        let sim = simulate(&fitted, &SimConfig::new(test.horizon(), 3).with_history(train.clone()))?;
        generated.push((label.to_string(), sim));
    }

    let width = (test.horizon() - train.horizon()) / 100.0;
    for cmp in compare_models(&test, &generated, train.horizon(), width)? {
        for key in [CurveKey::Product(0), CurveKey::Product(1), CurveKey::Product(2), CurveKey::Pooled] {
            let row = cmp.row(key).expect("row present");
            println!(
                "{:<12} {:>6}: pearson {:>7}  inv_l1 {:.4}  events {} (real {})",
                cmp.model,
                key.to_string(),
                row.pearson.map_or("n/a".into(), |v| format!("{v:.3}")),
                row.inv_l1,
                row.generated_count,
                row.real_count
            );
        }
    }
    Ok(())
}
