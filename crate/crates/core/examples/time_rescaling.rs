//! Goodness of fit by time rescaling: under the right model the integrated
//! intensity between events is unit exponential.
//!
//! cargo run --release --example time_rescaling

use cascades::diagnostics::{ks_exponential, rescaled_gaps};
use cascades::experiments::random_params;
use cascades::simulation::simulate_count;
use cascades::MarkModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cascades::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = random_params(5, 2, 0.5, 0.2, MarkModel::SoftMax { beta: 1.0 }, &mut rng)?;
    let log = simulate_count(&truth, 11, 5000, None)?;

    let ks = ks_exponential(&rescaled_gaps(&log, &truth)?)?;
    println!("true parameters:    D = {:.4}, p = {:.3}", ks.statistic, ks.p_value);

    let mut slow = truth.clone();
    for p in 0..truth.n_products() {
        slow.scale_product_baseline(p, 0.5)?;
    }
    let ks = ks_exponential(&rescaled_gaps(&log, &slow)?)?;
    println!("halved baselines:   D = {:.4}, p = {:.3e}", ks.statistic, ks.p_value);
    Ok(())
}
