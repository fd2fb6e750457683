//! Estimation error of the DR Lasso and DR ridge estimators inside RoLF.
//!
//! Prints `max_a |x̃_a^T (μ̂_t - μ*)|` as the run progresses. The second
//! argument scales the Lasso penalties (1 = theoretical schedule).
//!
//! ```bash
//! cargo run --release -p rolf --example dr_estimators -- 2000 0.1
//! ```

use rolf::dr::RefitSchedule;
use rolf::env::{generate_instance, sample_reward, FeatureCase, ScenarioConfig};
use rolf::policy::{Policy, PolicyConfig, Rolf};
use rolf::rng::{self, StreamKind};

fn main() -> rolf::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon: usize = args.next().map_or(2000, |s| s.parse().expect("horizon"));
    let penalty_scale: f64 = args.next().map_or(1.0, |s| s.parse().expect("penalty scale"));

    let inst = generate_instance(&ScenarioConfig::partially_observed(FeatureCase::General, 1))?;
    let mut cfg = PolicyConfig::new(horizon);
    cfg.refit = RefitSchedule::EveryMatched;
    cfg.penalty_scale = penalty_scale;
    let x = inst.x();
    let truth = inst.expected_rewards().clone();

    let mut lasso = Rolf::lasso(&x, &cfg, rng::stream(0, 1, StreamKind::Policy, 0))?;
    let mut ridge = Rolf::ridge(&x, &cfg, rng::stream(0, 1, StreamKind::Policy, 1))?;
    let mut env_l = rng::stream(0, 1, StreamKind::Environment, 0);
    let mut env_r = rng::stream(0, 1, StreamKind::Environment, 1);
    println!("{:>6} {:>10} {:>10}", "t", "lasso", "ridge");
    for t in 1..=horizon {
        lasso.step(t, &x, &mut |a| sample_reward(&inst, a, &mut env_l))?;
        ridge.step(t, &x, &mut |a| sample_reward(&inst, a, &mut env_r))?;
        if t.is_power_of_two() || t == horizon {
            let err = |p: &Rolf| (p.features().values(p.estimator().main_mu()) - &truth).amax();
            println!("{t:>6} {:>10.4} {:>10.4}", err(&lasso), err(&ridge));
        }
    }
    println!("forced exploration rounds: {}", lasso.gate().ledger());
    Ok(())
}
