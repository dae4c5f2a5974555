//! Simulates a small network, fits it back, and compares the estimate with the
//! generating parameters.
//!
//! cargo run --release --example simulate_and_fit

use cascades::experiments::random_params;
use cascades::metrics::param_errors;
use cascades::{fit_all, simulate, FitConfig, MarkModel, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cascades::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = random_params(10, 3, 0.3, 0.1, MarkModel::SoftMax { beta: 2.0 }, &mut rng)?;
    let log = simulate(&truth, &SimConfig::new(500.0, 7))?;
    println!("simulated {} events, per product {:?}", log.len(), log.product_counts());

    let (fitted, report) = fit_all(&log, &FitConfig::with_beta(2.0))?;
    println!(
        "fit: nll {:.3}, {}/{} users converged, {} inner iterations, {:.2}s",
        report.total_nll,
        report.n_converged,
        report.users.len(),
        report.total_inner_iterations,
        report.wall_time_secs
    );
    let errors = param_errors(&fitted, &truth)?;
    println!("mse {:.3e} (alpha {:.3e}, mu {:.3e})", errors.mse, errors.mse_alpha, errors.mse_mu);
    let fmt = |row: &[f64]| row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ");
    for u in 0..3 {
        println!("user {u}: mu true [{}]  fit [{}]", fmt(truth.mu_row(u)), fmt(fitted.mu_row(u)));
    }
    Ok(())
}
