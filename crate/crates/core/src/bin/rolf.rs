//! Command-line front end: run experiments from a config file and export
//! instance fixtures.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rolf::env::{
    generate_instance, lower_bound_instance_thm1, lower_bound_instance_three_arm, write_instance,
    FeatureCase, Scenario, ScenarioConfig,
};
use rolf::harness::{aggregate, all_records, emit_outputs, run_experiment, ExperimentConfig};
use rolf::policy::Algorithm;
use rolf::Error;

#[derive(Parser)]
#[command(name = "rolf", version, about = "Linear bandits with partially observable features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair and write runs.csv / summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the algorithm list (repeatable).
        #[arg(long = "algo")]
        algos: Vec<String>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        exploration_scale: Option<f64>,
        /// Also write regret.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Write an instance in the plain-text fixture format.
    Instance {
        #[arg(long, value_enum)]
        kind: InstanceKind,
        #[arg(long)]
        dump: PathBuf,
        /// Scenario number for `--kind scenario`.
        #[arg(long, default_value_t = 1)]
        scenario: u8,
        /// Case number for `--kind scenario`.
        #[arg(long, default_value_t = 1)]
        case: u8,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Observed / latent dimensions for `--kind app-f`.
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        d_u: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceKind {
    Thm1,
    #[value(name = "appF", alias = "appf")]
    AppF,
    Scenario,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn execute(cmd: Command) -> rolf::Result<()> {
    match cmd {
        Command::Run {
            config,
            algos,
            seeds,
            horizon,
            out,
            exploration_scale,
            plot,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| match e {
                Error::Io { .. } => Error::Config(e.to_string()),
                other => other,
            })?;
            if !algos.is_empty() {
                cfg.algorithms = algos
                    .iter()
                    .map(|a| a.parse::<Algorithm>())
                    .collect::<rolf::Result<_>>()?;
            }
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if let Some(h) = horizon {
                cfg.horizon = h;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            if exploration_scale.is_some() {
                cfg.exploration_scale = exploration_scale;
            }
            cfg.plot |= plot;
            cfg.validate()?;

            let results = run_experiment(&cfg)?;
            let records = all_records(&results);
            let files = emit_outputs(&records, &cfg.out, cfg.plot)?;
            let summary = aggregate(&records);
            println!("final cumulative regret at t = {}:", cfg.horizon);
            for row in summary.iter().filter(|r| r.t == cfg.horizon) {
                println!("  {:<11} {:>10.3} ± {:.3}", row.algorithm.name(), row.mean, row.std);
            }
            println!("wrote {}", files.runs.display());
            println!("wrote {}", files.summary.display());
            if let Some(p) = files.plot {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Instance {
            kind,
            dump,
            scenario,
            case,
            seed,
            d,
            d_u,
        } => {
            let inst = match kind {
                InstanceKind::Thm1 => lower_bound_instance_thm1(),
                InstanceKind::AppF => lower_bound_instance_three_arm(d, d_u)
                    .map_err(|e| Error::Config(e.to_string()))?,
                InstanceKind::Scenario => generate_instance(&ScenarioConfig::new(
                    Scenario::from_number(scenario)?,
                    FeatureCase::from_number(case)?,
                    seed,
                ))?,
            };
            let file = File::create(&dump).map_err(|e| Error::Io {
                path: dump.clone(),
                source: e,
            })?;
            write_instance(&inst, BufWriter::new(file)).map_err(|e| Error::Io {
                path: dump.clone(),
                source: e,
            })?;
            println!("wrote {}", dump.display());
            Ok(())
        }
    }
}
