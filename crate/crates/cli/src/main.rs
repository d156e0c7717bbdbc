use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use switchadj::adjust::{DiagValue, Method};
use switchadj::commands::{cmd_adjust, cmd_report, cmd_simulate, cmd_sweep, load_config, result_csv};
use switchadj::config::RunConfig;
use switchadj::Error;

/// Treatment-switching adjustment and simulation study runner.
#[derive(Parser)]
#[command(name = "switchadj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Overrides `scenario.seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML config, or a previous run's manifest.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write simulated datasets for one scenario.
    Simulate {
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[command(flatten)]
        shared: Shared,
    },
    /// Adjust one dataset with one method.
    Adjust {
        dataset: PathBuf,
        /// itt, exclude, censor, ipcw, rpsftm, ipe, srp or rf.
        #[arg(long)]
        method: String,
        #[command(flatten)]
        shared: Shared,
    },
    /// Run the factorial simulation study.
    Sweep {
        /// Overrides `factorial.reps`.
        #[arg(long)]
        reps: Option<u64>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Rebuild tables and plots from a sweep directory.
    Report {
        input: PathBuf,
        /// Keep only the first N replicates of every cell.
        #[arg(long)]
        reps: Option<u64>,
        #[command(flatten)]
        shared: Shared,
    },
}

fn config(shared: &Shared) -> Result<RunConfig, Error> {
    let mut cfg = load_config(shared.config.as_deref())?;
    if let Some(seed) = shared.seed {
        cfg.scenario.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(shared: &Shared, default: &str) -> PathBuf {
    shared.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Simulate { reps, shared } => {
            let out = out_dir(&shared, "datasets");
            let m = cmd_simulate(&config(&shared)?, reps, &out)?;
            eprintln!("wrote {} datasets to {}", m.outputs.len(), out.display());
            Ok(0)
        }
        Command::Adjust { dataset, method, shared } => {
            let method: Method = method.parse()?;
            let r = cmd_adjust(&config(&shared)?, &dataset, method, shared.out.as_deref())?;
            print!("{}", result_csv(&r, &dataset.display().to_string())?);
            for (k, v) in &r.diagnostics {
                eprintln!("{k} = {v}");
            }
            if r.diagnostics.get("converged") == Some(&DiagValue::Bool(false)) {
                eprintln!("error: {method} hit its iteration limit");
                return Ok(4);
            }
            Ok(0)
        }
        Command::Sweep { reps, shared } => {
            let mut cfg = config(&shared)?;
            if let Some(r) = reps {
                cfg.factorial.reps = r;
            }
            let out = out_dir(&shared, "sweep");
            let run = cmd_sweep(&cfg, &out, shared.jobs, |done, total| {
                eprintln!("scenario {done}/{total} done");
            })?;
            for f in &run.manifest.failures {
                eprintln!("partial failure: {f}");
            }
            eprintln!("wrote {} files to {}", run.manifest.outputs.len() + 1, out.display());
            Ok(run.exit_code())
        }
        Command::Report { input, reps, shared } => {
            let out = out_dir(&shared, "report");
            let rows = cmd_report(&input, reps, &out)?;
            eprintln!("wrote report for {} cells to {}", rows.len(), out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
