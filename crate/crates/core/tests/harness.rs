use std::fs;
use std::time::Instant;

use rolf::env::{FeatureCase, Scenario};
use rolf::harness::{
    aggregate, all_records, emit_outputs, read_runs, read_summary, run_experiment, ExperimentConfig,
    InstanceSpec,
};
use rolf::policy::Algorithm;

fn small(algorithms: Vec<Algorithm>, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        algorithms,
        seeds,
        horizon: 150,
        ..ExperimentConfig::synthetic(Scenario::PartiallyObserved, FeatureCase::General)
    }
}

#[test]
fn repeated_seed_gives_identical_streams() {
    let cfg = small(vec![Algorithm::RolfLasso, Algorithm::LinTs], vec![1, 1]);
    let results = run_experiment(&cfg).unwrap();
    for pair in results.chunks(2) {
        let strip = |r: &rolf::harness::RunResult| {
            r.records
                .iter()
                .map(|x| (x.t, x.explored, x.matched, x.arm, x.reward.to_bits(), x.cumulative_regret.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(pair[0].algorithm, pair[1].algorithm);
        assert_eq!(strip(&pair[0]), strip(&pair[1]));
    }
}

#[test]
fn identical_configs_write_identical_bytes() {
    let cfg = small(vec![Algorithm::RolfRidge, Algorithm::UcbDelta, Algorithm::DrLasso], vec![3, 4]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = emit_outputs(&all_records(&run_experiment(&cfg).unwrap()), a.path(), true).unwrap();
    let fb = emit_outputs(&all_records(&run_experiment(&cfg).unwrap()), b.path(), true).unwrap();
    assert_eq!(fs::read(fa.runs).unwrap(), fs::read(fb.runs).unwrap());
    assert_eq!(fs::read(fa.summary).unwrap(), fs::read(fb.summary).unwrap());
    assert_eq!(fs::read(fa.plot.unwrap()).unwrap(), fs::read(fb.plot.unwrap()).unwrap());
}

#[test]
fn csv_round_trip_reproduces_aggregates() {
    let cfg = small(vec![Algorithm::RolfLasso, Algorithm::LinUcb], vec![1, 2, 3]);
    let records = all_records(&run_experiment(&cfg).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&records, dir.path(), false).unwrap();
    assert!(files.plot.is_none());
    let back = read_runs(&files.runs).unwrap();
    assert_eq!(back, records);
    assert_eq!(aggregate(&back), aggregate(&records));
    assert_eq!(read_summary(&files.summary).unwrap(), aggregate(&records));
}

#[test]
fn cumulative_regret_is_prefix_sum() {
    let cfg = small(vec![Algorithm::RolfRidge, Algorithm::LinTs], vec![7]);
    for run in run_experiment(&cfg).unwrap() {
        let mut sum = 0.0;
        for r in &run.records {
            sum += r.regret;
            assert!(r.regret >= 0.0);
            assert!((r.cumulative_regret - sum).abs() < 1e-9);
        }
    }
}

#[test]
fn empty_records_give_header_only_files() {
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&[], dir.path(), false).unwrap();
    for path in [files.runs, files.summary] {
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("run_id,") || text.starts_with("algorithm,"));
    }
}

#[test]
fn svg_has_one_curve_per_algorithm_and_labels_come_from_config() {
    let algorithms = vec![Algorithm::RolfRidge, Algorithm::LinUcb, Algorithm::UcbDelta];
    let cfg = small(algorithms.clone(), vec![1, 2]);
    let records = all_records(&run_experiment(&cfg).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&records, dir.path(), true).unwrap();
    let svg = fs::read_to_string(files.plot.unwrap()).unwrap();
    assert_eq!(svg.matches("<polyline").count(), algorithms.len());
    for row in read_summary(&files.summary).unwrap() {
        assert!(algorithms.contains(&row.algorithm));
    }
    for r in read_runs(&files.runs).unwrap() {
        assert!(algorithms.contains(&r.algorithm));
    }
}

#[test]
fn single_seed_has_zero_spread() {
    let cfg = small(vec![Algorithm::LinTs], vec![11]);
    let summary = aggregate(&all_records(&run_experiment(&cfg).unwrap()));
    assert_eq!(summary.len(), cfg.horizon);
    assert!(summary.iter().all(|r| r.std == 0.0 && r.min == r.max && r.mean == r.max));
}

#[test]
fn incompatible_feature_modes_are_config_errors() {
    let fixed = small(vec![Algorithm::RolfV], vec![1]);
    assert!(fixed.validate().unwrap_err().is_config());
    assert!(run_experiment(&fixed).unwrap_err().is_config());
    let varying = ExperimentConfig {
        time_varying: true,
        jitter: 0.1,
        ..small(vec![Algorithm::RolfLasso], vec![1])
    };
    assert!(varying.validate().unwrap_err().is_config());
    let named = ExperimentConfig {
        instance: InstanceSpec::ThreeArm { d: 2, d_u: 3 },
        ..small(vec![Algorithm::LinUcb], vec![1])
    };
    assert!(named.validate().unwrap_err().is_config());
}

#[test]
fn default_benchmark_fits_time_budget() {
    let cfg = ExperimentConfig::default();
    assert_eq!((cfg.algorithms.len(), cfg.seeds.len(), cfg.horizon), (6, 5, 1200));
    let start = Instant::now();
    let results = run_experiment(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(results.len(), 30);
    assert!(results.iter().all(|r| r.records.len() == 1200));
    assert!(elapsed < 60.0, "took {elapsed:.1}s");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        n += 1;
    }
    assert!(n >= 4);
}
