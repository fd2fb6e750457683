//! RoLF-V against observed-only baselines when observed features jitter
//! around a fixed mean every round.
//!
//! ```bash
//! cargo run --release -p rolf --example time_varying -- 0.2
//! ```

use rolf::env::{FeatureCase, Scenario};
use rolf::harness::{aggregate, all_records, run_experiment, ExperimentConfig};
use rolf::policy::Algorithm;

fn main() -> rolf::Result<()> {
    let jitter: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("jitter must be a number"))
        .unwrap_or(0.2);
    let cfg = ExperimentConfig {
        algorithms: vec![Algorithm::RolfV, Algorithm::LinUcb, Algorithm::LinTs, Algorithm::UcbDelta],
        time_varying: true,
        jitter,
        ..ExperimentConfig::synthetic(Scenario::PartiallyObserved, FeatureCase::General)
    };
    let records = all_records(&run_experiment(&cfg)?);
    println!("jitter {jitter}, T = {}", cfg.horizon);
    for row in aggregate(&records).iter().filter(|r| r.t == cfg.horizon) {
        println!("  {:<10} {:>9.2} ± {:.2}", row.algorithm.name(), row.mean, row.std);
    }
    Ok(())
}
