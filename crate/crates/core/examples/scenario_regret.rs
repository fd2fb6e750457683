//! Multi-seed comparison on a synthetic scenario, written to CSV and SVG.
//!
//! ```bash
//! cargo run --release -p rolf --example scenario_regret -- 1 2 out/s1c2
//! ```

use std::path::PathBuf;

use rolf::env::{FeatureCase, Scenario};
use rolf::harness::{aggregate, all_records, emit_outputs, run_experiment, ExperimentConfig};

fn main() -> rolf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scenario = args.first().map_or(Ok(1), |s| s.parse::<u8>()).expect("scenario number");
    let case = args.get(1).map_or(Ok(1), |s| s.parse::<u8>()).expect("case number");
    let out = args.get(2).map(PathBuf::from).unwrap_or_else(|| {
        std::env::temp_dir().join(format!("rolf_scenario{scenario}_case{case}"))
    });

    let mut cfg = ExperimentConfig::synthetic(Scenario::from_number(scenario)?, FeatureCase::from_number(case)?);
    cfg.out = out;
    cfg.plot = true;
    let results = run_experiment(&cfg)?;
    let records = all_records(&results);

    println!("scenario {scenario}, case {case}, T = {}, seeds {:?}", cfg.horizon, cfg.seeds);
    for row in aggregate(&records).iter().filter(|r| r.t == cfg.horizon) {
        println!("  {:<11} {:>9.2} ± {:.2}", row.algorithm.name(), row.mean, row.std);
    }
    let files = emit_outputs(&records, &cfg.out, cfg.plot)?;
    println!("wrote {} and {}", files.runs.display(), files.summary.display());
    if let Some(svg) = files.plot {
        println!("wrote {}", svg.display());
    }
    Ok(())
}
