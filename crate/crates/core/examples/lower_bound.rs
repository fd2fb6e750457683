//! Observed-only policies on the two lower-bound instances.
//!
//! On the two-arm instance the observed-only ridge fit has a negative slope,
//! so LinUCB and LinTS settle on the worse arm. On the three-arm instance the
//! optimal arm and a bad arm share observed features, so LinUCB cannot tell
//! them apart: its scores for the two tie forever and only tie-breaking
//! decides which one it plays.
//!
//! ```bash
//! cargo run -p rolf --example lower_bound
//! ```

use rolf::env::{lower_bound_instance_thm1, lower_bound_instance_three_arm, sample_reward, ProblemInstance};
use rolf::policy::{build_policy, cumulative_regret, Algorithm, LinUcb, PolicyConfig};
use rolf::rng::{self, StreamKind};

const HORIZON: usize = 2000;

fn final_regret(inst: &ProblemInstance, algorithm: Algorithm, seed: u64) -> rolf::Result<(f64, f64)> {
    let mut cfg = PolicyConfig::new(HORIZON);
    cfg.sigma = inst.noise_sigma();
    let mut policy = build_policy(algorithm, inst, &cfg, rng::stream(0, seed, StreamKind::Policy, 0))?;
    let mut env = rng::stream(0, seed, StreamKind::Environment, 0);
    let x = inst.x();
    let mut arms = Vec::with_capacity(HORIZON);
    for t in 1..=HORIZON {
        arms.push(policy.step(t, &x, &mut |a| sample_reward(inst, a, &mut env))?.arm);
    }
    let opt = inst.optimal_arm();
    let late = arms[HORIZON / 2..].iter().filter(|&&a| a != opt).count() as f64 / (HORIZON / 2) as f64;
    Ok((cumulative_regret(&arms, inst)[HORIZON - 1], late))
}

fn main() -> rolf::Result<()> {
    let thm1 = lower_bound_instance_thm1();
    println!("two-arm instance: expected rewards {:?}", thm1.expected_rewards().as_slice());
    for algorithm in [Algorithm::LinUcb, Algorithm::LinTs, Algorithm::RolfRidge, Algorithm::RolfLasso] {
        let (regret, late) = final_regret(&thm1, algorithm, 1)?;
        println!("  {algorithm:<11} regret {regret:>8.2}, suboptimal share in second half {late:.2}");
    }

    let three = lower_bound_instance_three_arm(4, 4)?;
    println!("three-arm instance: expected rewards {:?}", three.expected_rewards().as_slice());
    let x = three.x();
    let ucb = LinUcb::new(x.nrows(), 1.0, 1.0);
    let s = ucb.scores(&x);
    println!("  LinUCB scores at t = 1: {:?} (arms 0 and 1 tie)", s.as_slice());
    for algorithm in [Algorithm::LinUcb, Algorithm::LinTs, Algorithm::RolfRidge] {
        let (regret, late) = final_regret(&three, algorithm, 1)?;
        println!("  {algorithm:<11} regret {regret:>8.2}, suboptimal share in second half {late:.2}");
    }
    Ok(())
}
