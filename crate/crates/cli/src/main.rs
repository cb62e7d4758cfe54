use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use raftlim_core::harness::{self, RunConfig};
use raftlim_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "raftlim",
    version,
    about = "Surface Cahn-Hilliard / bulk diffusion solver and diagnostics"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for sweeps (0: all cores).
    #[arg(long, global = true, env = "RAFTLIM_THREADS")]
    threads: Option<usize>,

    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the meshes of a configuration and print their statistics.
    Mesh,
    /// Run one simulation.
    Run,
    /// Run the epsilon sweep of a configuration.
    Sweep,
    /// Recompute diagnostics from the snapshots of a previous run.
    Diag,
    /// Print reference values of the one-dimensional profile.
    Oracle {
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    RunConfig::from_path(path)
}

fn execute(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Oracle { epsilon } => {
            println!("{}", harness::oracle_report(*epsilon)?);
        }
        Command::Mesh => {
            let cfg = load_config(cli)?;
            let (surface, bulk) = cfg.build_meshes(cfg.model.epsilon)?;
            let report = harness::mesh_report(&surface, &bulk)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        Command::Run => {
            let cfg = load_config(cli)?;
            let out = harness::run_simulation(&cfg, &cli.out)?;
            let traj = &out.trajectory;
            info!(
                "{} steps in {:.2?}; csv at {}",
                traj.records.len() - 1,
                traj.wall_clock,
                out.csv_path.display()
            );
            if let Some(msg) = &traj.failure {
                error!("run failed: {msg}");
                let t = traj.records.last().map(|r| r.t).unwrap_or(0.0);
                return Err(Error::NumericalBlowup { field: "state", t });
            }
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            if cfg.sweep.is_none() {
                return Err(Error::Config("configuration has no [sweep] section".into()));
            }
            let summary = harness::run_sweep(&cfg, &cli.out, cli.threads.unwrap_or(0))?;
            for row in &summary.rows {
                info!(
                    "epsilon {:<8} disc_ratio {:.4e} F {:.5} failed {}",
                    row.epsilon, row.disc_ratio, row.f_final, row.failed
                );
            }
            info!("verdicts: {:?}", summary.verdicts);
        }
        Command::Diag => {
            let cfg = load_config(cli)?;
            let records = harness::diag_from_snapshots(&cfg, &cli.out)?;
            let path = cli.out.join("diag.csv");
            harness::write_csv(&path, &records)?;
            info!("{} rows written to {}", records.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
