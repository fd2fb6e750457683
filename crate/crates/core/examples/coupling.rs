//! Pseudo-actions, resampling caps and doubly robust pseudo-rewards.
//!
//! ```bash
//! cargo run -p rolf --example coupling
//! ```

use nalgebra::DVector;
use rolf::dr::{pseudo_action_probs, pseudo_rewards, resample_couple, rho_cap, CouplingParams};
use rolf::linalg::AugmentedFeatureSet;
use rolf::rng;

fn main() -> rolf::Result<()> {
    let params = CouplingParams::new(0.6, 1e-4)?;
    let k = 5;
    println!("pseudo-action probabilities around arm 2: {:?}", pseudo_action_probs(2, k, 0.6)?);
    for t in [1, 10, 100, 1000] {
        println!("t = {t:>4}: resampling cap {}", rho_cap(t, &params));
    }

    let mut r = rng::from_seed(3);
    let trials = 100_000;
    for t in [1usize, 10, 100] {
        let (mut attempts, mut failures, mut greedy) = (0, 0, 0);
        for _ in 0..trials {
            let c = resample_couple(0, t, k, &params, &mut r);
            attempts += c.attempts;
            failures += usize::from(!c.matched);
            greedy += usize::from(c.played == 0);
        }
        println!(
            "t = {t:>3}: mean attempts {:.3}, failures {failures}, greedy arm played {:.3}",
            attempts as f64 / trials as f64,
            greedy as f64 / trials as f64
        );
    }

    // One matched round on indicator features: the played arm is corrected by
    // 1/p, every other arm keeps its imputed value.
    let features = AugmentedFeatureSet::with_indicators(&nalgebra::DMatrix::zeros(1, k));
    let mu_check = DVector::from_fn(k + 1, |i, _| 0.1 * i as f64);
    let y = pseudo_rewards(&features, &mu_check, 2, 1.0, 0.6);
    println!("pseudo-rewards after playing arm 2 with reward 1: {:?}", y.as_slice());
    Ok(())
}
