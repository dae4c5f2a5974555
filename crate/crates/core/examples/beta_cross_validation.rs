//! Chooses the soft-max sharpness by held-out likelihood on data generated with a
//! known value.
//!
//! cargo run --release --example beta_cross_validation -- [true_beta]

use cascades::experiments::random_params;
use cascades::inference::{cross_validate_beta, DEFAULT_BETA_GRID, DEFAULT_HOLDOUT};
use cascades::simulation::simulate_count;
use cascades::{FitConfig, MarkModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cascades::Result<()> {
    let beta = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth = random_params(4, 3, 1.0, 0.3, MarkModel::SoftMax { beta }, &mut rng)?;
    let log = simulate_count(&truth, 3, 3000, None)?;
    let selection = cross_validate_beta(&log, &DEFAULT_BETA_GRID, DEFAULT_HOLDOUT, &FitConfig::default())?;
    println!("generated with beta = {beta}");
    for (b, score) in &selection.scores {
        let mark = if *b == selection.beta { "  <- selected" } else { "" };
        println!("beta {b:>6}: held-out nll per event {score:.5}{mark}");
    }
    Ok(())
}
