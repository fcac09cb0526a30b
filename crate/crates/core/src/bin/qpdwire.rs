use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qpdwire::experiment::{
    self, run_calibration, run_coeff_scan, run_error_scaling, run_swap_sweep, ExperimentConfig, ExperimentKind,
    SCHEMA_VERSION,
};
use qpdwire::verify::{run_verify, VerifyOptions};
use qpdwire::{Execution, QpdError, Result};

#[derive(Parser)]
#[command(
    name = "qpdwire",
    version,
    about = "Noisy-link state transfer by quasiprobability decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate the entanglement fidelity of every configured channel.
    Calibrate(RunArgs),
    /// Estimation error against shot count for every method and channel.
    Simulate(RunArgs),
    /// Teleportation fidelity after repeated noisy SWAPs on the resource state.
    SwapSweep {
        #[command(flatten)]
        run: RunArgs,
        /// Depolarizing strength of each SWAP (overrides the config).
        #[arg(long)]
        per_swap_noise: Option<f64>,
        /// Largest SWAP count (overrides the config).
        #[arg(long)]
        max_swaps: Option<usize>,
    },
    /// Estimation error against the channel-branch coefficient.
    CoeffScan {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the per-curve minimizers to this CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; falls back to the config's output, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

impl RunArgs {
    fn load(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if kind == ExperimentKind::SwapSweep => {
                let seed = self
                    .seed
                    .ok_or_else(|| QpdError::Config("swap-sweep without --config needs --seed".into()))?;
                ExperimentConfig::from_json_str(&format!(
                    r#"{{"schema_version":{SCHEMA_VERSION},"kind":"swap_sweep","seed":{seed}}}"#
                ))?
            }
            None => return Err(QpdError::Config("--config is required".into())),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }

    fn emit<T: Serialize>(&self, cfg: &ExperimentConfig, rows: &[T]) -> Result<()> {
        match self.out.as_deref().or(cfg.output.as_deref()) {
            Some(path) => experiment::write_csv_file(path, rows),
            None => experiment::write_csv(std::io::stdout().lock(), rows),
        }
    }
}

fn write_summary<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    experiment::write_csv_file(path, rows)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify { seed } => {
            let report = run_verify(&VerifyOptions {
                seed,
                ..Default::default()
            });
            print!("{}", report.table());
            Ok(report.passed())
        }
        Command::Calibrate(args) => {
            let cfg = args.load(ExperimentKind::ErrorScaling)?;
            let rows = run_calibration(&cfg, args.exec())?;
            args.emit(&cfg, &rows)?;
            Ok(true)
        }
        Command::Simulate(args) => {
            let cfg = args.load(ExperimentKind::ErrorScaling)?;
            let rows = run_error_scaling(&cfg, args.exec())?;
            args.emit(&cfg, &rows)?;
            Ok(true)
        }
        Command::SwapSweep {
            run,
            per_swap_noise,
            max_swaps,
        } => {
            let mut cfg = run.load(ExperimentKind::SwapSweep)?;
            if let Some(p) = per_swap_noise {
                cfg.per_swap_noise = p;
            }
            if let Some(k) = max_swaps {
                cfg.max_swaps = k;
            }
            cfg.validate()?;
            let out = run_swap_sweep(&cfg, run.exec())?;
            run.emit(&cfg, &out.rows)?;
            let show = |k: Option<usize>| k.map_or_else(|| "none".to_string(), |k| k.to_string());
            eprintln!(
                "first k with F < 0.5: calibrated {}, exact {}",
                show(out.first_below_half),
                show(out.first_below_half_exact)
            );
            Ok(true)
        }
        Command::CoeffScan { run, summary } => {
            let cfg = run.load(ExperimentKind::CoeffScan)?;
            let out = run_coeff_scan(&cfg, run.exec())?;
            run.emit(&cfg, &out.rows)?;
            match summary {
                Some(path) => write_summary(&path, &out.summaries)?,
                None => {
                    let mut err = std::io::stderr().lock();
                    for s in &out.summaries {
                        writeln!(
                            err,
                            "{} F={} theta={} N={} {}: c_opt={:.4} c_com={:.4}",
                            s.method, s.f_target, s.theta, s.shots, s.observable, s.c_opt, s.c_com
                        )?;
                    }
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
