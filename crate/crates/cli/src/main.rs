use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lfc_core::metrics::metrics_report;
use lfc_core::optimizer::benchmarks;
use lfc_core::workflow::{
    cmd_bench_optimizer, cmd_compare, cmd_replay, cmd_simulate, cmd_train, cmd_tune, BenchConfig,
    Overrides,
};
use lfc_core::{ControllerKind, Error};

/// Load-frequency control experiments on a PV / solar-thermal microgrid.
#[derive(Parser)]
#[command(name = "lfc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's controller and record trace, metrics and a run record.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Controller to run instead of the scenario's.
        #[arg(long, value_parser = parse_kind)]
        controller: Option<ControllerKind>,
    },
    /// Search PID gains with the whale optimiser.
    Tune {
        #[command(flatten)]
        common: Common,
        /// `mwoa-pid` (modified search) or `woa-pid` (canonical search).
        #[arg(long, value_parser = parse_kind)]
        controller: Option<ControllerKind>,
    },
    /// Identify the plant and train the NARMA-L2 networks.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Run several controllers on one scenario side by side.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Repeatable; defaults to pid, mwoa-pid and narma.
        #[arg(long = "controller", value_parser = parse_kind)]
        controllers: Vec<ControllerKind>,
    },
    /// Compare canonical and modified whale search on a benchmark function.
    BenchOptimizer {
        /// One of sphere, rosenbrock, rastrigin.
        #[arg(long, default_value = "sphere")]
        function: String,
        #[arg(long)]
        out: PathBuf,
        /// First seed; runs use `seed, seed + 1, ...`.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of seeds per variant.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 30)]
        agents: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 2.0)]
        cf1: f64,
        #[arg(long, default_value_t = 2.0)]
        cf2: f64,
    },
    /// Re-run a recorded simulation and check the trace is byte-identical.
    Replay {
        /// A `run.toml` written by `simulate`.
        #[arg(long)]
        record: PathBuf,
    },
}

fn parse_kind(s: &str) -> Result<ControllerKind, String> {
    ControllerKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = ControllerKind::ALL.iter().map(|k| k.name()).collect();
        format!(
            "unknown controller `{s}`, expected one of {}",
            names.join(", ")
        )
    })
}

fn overrides(common: &Common, controller: Option<ControllerKind>) -> Overrides {
    Overrides {
        seed: common.seed,
        controller,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Simulate { common, controller } => {
            let rec = cmd_simulate(
                &common.scenario,
                &common.out,
                &overrides(&common, controller),
            )?;
            print!(
                "{}",
                metrics_report(&[(rec.controller.name().into(), rec.metrics)])
            );
            println!("wrote {}", common.out.display());
        }
        Command::Tune { common, controller } => {
            let res = cmd_tune(
                &common.scenario,
                &common.out,
                &overrides(&common, controller),
            )?;
            println!(
                "kp = {}  ki = {}  kd = {}  (fitness {:.6e}, seed {})",
                res.gains.kp, res.gains.ki, res.gains.kd, res.best_fitness, res.seed
            );
            println!("wrote {}", common.out.display());
        }
        Command::Train { common } => {
            let res = cmd_train(&common.scenario, &common.out, &overrides(&common, None))?;
            println!("{} epochs", res.epochs);
            print!("{}", res.report.to_text());
            println!("wrote {}", common.out.display());
        }
        Command::Compare {
            common,
            controllers,
        } => {
            let rows = cmd_compare(
                &common.scenario,
                &common.out,
                &controllers,
                &overrides(&common, None),
            )?;
            print!("{}", metrics_report(&rows));
            println!("wrote {}", common.out.display());
        }
        Command::BenchOptimizer {
            function,
            out,
            seed,
            seeds,
            dim,
            agents,
            iters,
            cf1,
            cf2,
        } => {
            let cfg = BenchConfig {
                dim,
                agents,
                max_iter: iters,
                cf1,
                cf2,
                ..BenchConfig::new(&function, (seed..seed + seeds).collect())
            };
            let (_, summary) = cmd_bench_optimizer(&cfg, &out)?;
            println!(
                "{function} (dim {dim}; functions: {})",
                benchmarks::NAMES.join(", ")
            );
            for s in summary {
                println!(
                    "  {:?}: median {:.4e}  IQR [{:.4e}, {:.4e}]  over {} runs",
                    s.variant, s.median, s.q1, s.q3, s.runs
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Replay { record } => {
            let rep = cmd_replay(&record)?;
            if rep.identical {
                println!(
                    "identical: {} ({})",
                    rep.trace_path.display(),
                    rep.replayed_sha256
                );
            } else {
                eprintln!(
                    "MISMATCH: {} recorded {} replayed {}",
                    rep.trace_path.display(),
                    rep.recorded_sha256,
                    rep.replayed_sha256
                );
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match &e {
                Error::Validation(_) => 2,
                e if e.is_numerical() => 3,
                _ => 1,
            })
        }
    }
}
