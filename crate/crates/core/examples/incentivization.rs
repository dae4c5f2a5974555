//! Doubles one product's baseline halfway through and compares how independent and
//! correlated cascades respond.
//!
//! cargo run --release --example incentivization -- [seed]

use cascades::experiments::{counts_between, run_incentivization, IncentiveConfig};

fn main() -> cascades::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2016);
    let config = IncentiveConfig {
        seed,
        ..IncentiveConfig::default()
    };
    let outcome = run_incentivization(&config)?;
    println!(
        "shared history: {} events before t={}",
        outcome.history.len(),
        config.switch_time
    );
    let width = config.horizon - config.switch_time;
    for run in &outcome.runs {
        let before = counts_between(&run.log, 0.0, config.switch_time);
        let after = counts_between(&run.log, config.switch_time, config.horizon);
        let total: usize = after.iter().sum();
        let shares: Vec<String> = after
            .iter()
            .map(|&c| format!("{:.3}", c as f64 / total.max(1) as f64))
            .collect();
        let rates: Vec<String> = before
            .iter()
            .zip(&after)
            .map(|(&b, &a)| format!("{:.1}->{:.1}", b as f64 / config.switch_time, a as f64 / width))
            .collect();
        println!(
            "{:<24} post-switch share [{}]  rate [{}]",
            run.label,
            shares.join(", "),
            rates.join(", ")
        );
    }
    Ok(())
}
