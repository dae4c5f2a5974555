//! Fits the model on growing fractions of a simulated training set and reports how
//! parameter error and held-out likelihood improve.
//!
//! cargo run --release --example parameter_recovery -- [train_events]

use cascades::experiments::{run_recovery, RecoveryConfig};

fn main() -> cascades::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut config = RecoveryConfig::default();
    if let Some(k) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        config.train_events = k;
    }
    let outcome = run_recovery(&config)?;
    println!("train horizon {:.1}, test horizon {:.1}", outcome.train.horizon(), outcome.test.horizon());
    println!("fraction  events/user       mse       mae  avg_pred_nll  converged");
    for r in &outcome.rows {
        println!(
            "{:>8.1} {:>12.1} {:>9.3e} {:>9.4} {:>13.5} {:>6}/{}",
            r.fraction, r.events_per_user, r.errors.mse, r.errors.mae, r.avg_pred_loglik, r.n_converged, config.n_users
        );
    }
    Ok(())
}
