//! Experiment configuration, multi-seed runs, aggregation and file outputs.
//!
//! Runs are independent and execute in parallel. Each draws from RNG streams
//! keyed by the master seed, the run seed and the algorithm's position in the
//! config, so identical configs give byte-identical CSVs.

mod config;
mod output;
mod run;

pub use config::{ExperimentConfig, InstanceSpec, RefitMode, DEFAULT_ALGORITHMS};
pub use output::{aggregate, emit_outputs, read_runs, read_summary, render_svg, OutputFiles, SummaryRow};
pub use run::{run_experiment, run_single, RunRecord, RunResult};

/// Flattens run results into one record list in run order.
pub fn all_records(results: &[RunResult]) -> Vec<RunRecord> {
    results.iter().flat_map(|r| r.records.iter().cloned()).collect()
}
