//! `jamlab`: random sequential adsorption experiments from the command line.

mod config;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};

use config::{merge, read_file, resolve, Params, Subcommand};
use manifest::{Manifest, Sources};
use run::{execute, Failure};

const OUTPUTS: &str = "\
Every run writes its data file at --out and a manifest at <out>.manifest.json.
The manifest is written before any data, marked \"incomplete\", and rewritten
as \"complete\" (or \"failed\") at the end. It holds the resolved config with all
defaults, the file and flag values it came from, the master seed, every
per-replication seed, the engine version and the wall-clock time.

Column orders:
  pack         JSON lines: rep, seed, N, virtual_time, vacancy_bound, wall_ms, guard_saturated
  measure      CSV: rep, f_id, point_integral, volume_integral
  sweep        CSV: lambda, reps, mean_ratio, var_ratio, se_mean, se_var, ks
               <out>.detail.jsonl: lambda, rep, seed, N, virtual_time, vacancy_bound, wall_ms, guard_saturated
               <out>.summary.json: convergence-rate fit
  covariance   CSV: measure, i, j, cov_over_lambda, se
               <out>.detail.jsonl: rep, seed, N, point, volume
  stabilize    CSV: L, tau_hat, n, method
               <out>.detail.jsonl: rep, seed, sample;  <out>.summary.json: tail fit
  variability  JSON pipeline report

Keys may also come from a TOML file (--config); flags override it. File keys
use the flag names with `box` spelled `boxes`.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.";

#[derive(Parser)]
#[command(name = "jamlab", version, about = "Random sequential adsorption experiments", after_help = OUTPUTS)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "JAMLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Pack Q_lambda to saturation, or with finite input, once per replication.
    Pack(Params),
    /// Point and volume integrals of box indicators per replication.
    Measure(Params),
    /// Mean and variance of N over an intensity grid.
    Sweep(Params),
    /// Covariance of box-indicator integrals, scaled by 1/lambda.
    Covariance(Params),
    /// Tail of the radius of stabilization.
    Stabilize(Params),
    /// Jamming variability pipeline.
    Variability(Params),
    /// Rerun the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write here instead of the recorded output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("jamlab: cannot start {n} threads: {e}");
            return ExitCode::from(3);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jamlab: {e}");
            ExitCode::from(match e {
                Failure::Validation(_) => 2,
                Failure::Runtime(_) => 3,
            })
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let (cmd, flags) = match command {
        Command::Pack(p) => (Subcommand::Pack, p),
        Command::Measure(p) => (Subcommand::Measure, p),
        Command::Sweep(p) => (Subcommand::Sweep, p),
        Command::Covariance(p) => (Subcommand::Covariance, p),
        Command::Stabilize(p) => (Subcommand::Stabilize, p),
        Command::Variability(p) => (Subcommand::Variability, p),
        Command::Replay { manifest, out } => return replay(manifest, out),
    };
    let file_values = match &flags.config {
        Some(path) => Some(read_file(path).map_err(|e| Failure::Validation(e.0))?),
        None => None,
    };
    let merged = merge(file_values.as_ref().unwrap_or(&Params::default()), &flags);
    let cfg = resolve(cmd, &merged).map_err(|e| Failure::Validation(e.0))?;
    let sources = Sources { file: flags.config.clone(), file_values, flag_values: Params { config: None, ..flags }, replay_of: None };
    execute(cmd, cfg, sources)
}

fn replay(path: PathBuf, out: Option<PathBuf>) -> Result<(), Failure> {
    let old = Manifest::read(&path).map_err(|e| Failure::Validation(format!("{e:#}")))?;
    let mut cfg = old.config.clone();
    if out.is_some() {
        cfg.out = out;
    }
    let cfg = resolve(old.subcommand, &cfg).map_err(|e| Failure::Validation(e.0))?;
    let sources = Sources { replay_of: Some(path), ..old.sources };
    execute(old.subcommand, cfg, sources)
}
