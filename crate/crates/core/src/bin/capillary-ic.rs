use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capillary_ic::control::{run_with_observer, Policy};
use capillary_ic::io::{write_history_csv, write_vtk_snapshot, RunConfig};
use capillary_ic::observables::transient_time;
use capillary_ic::verify;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "capillary-ic", version, about = "Capillary free-surface flow in a nozzle with instantaneous control")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write history.csv (and optional VTK snapshots).
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Keep the bottom stress at zero.
        #[arg(long)]
        uncontrolled: bool,
        /// Write a snapshot every N steps.
        #[arg(long, value_name = "N")]
        snapshots: Option<usize>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run the Test Case 1 reference comparisons and report pass/fail.
    Verify,
}

fn run(config: &Path, uncontrolled: bool, snapshots: Option<usize>, out: Option<PathBuf>) -> capillary_ic::Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if uncontrolled {
        cfg.controlled = false;
    }
    if let Some(n) = snapshots {
        cfg.snapshot_every = n;
    }
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    let scenario = cfg.scenario()?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|source| capillary_ic::SimError::Io { path: cfg.output_dir.clone(), source })?;
    let policy = if cfg.controlled { Policy::Instantaneous } else { Policy::Constant(0.0) };
    let every = cfg.snapshot_every;
    let dir = cfg.output_dir.clone();
    let outcome = run_with_observer(&scenario, policy, |n, state| {
        if every > 0 && n % every == 0 {
            write_vtk_snapshot(state, &dir.join(format!("state_{n:05}.vtk")))?;
        }
        Ok(())
    })?;
    let csv = cfg.output_dir.join("history.csv");
    write_history_csv(&outcome.history, &csv)?;
    let z_inf = cfg.reference_height();
    let last = outcome.history.rows.last().expect("history has the initial row");
    println!("wrote {}", csv.display());
    println!("t = {:.4} s, Z_CL = {:.6e} m, zeta = {:.3e}", last.t, last.z_cl, last.zeta);
    match transient_time(&outcome.history, z_inf, 1e-3) {
        Some(t) => println!("transient time {t:.4} s (Z_inf = {z_inf:.4e} m)"),
        None => println!("band around Z_inf = {z_inf:.4e} m not attained"),
    }
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, uncontrolled, snapshots, out } => run(&config, uncontrolled, snapshots, out),
        Command::Verify => {
            let report = verify::test_case_1();
            for line in &report {
                println!("{line}");
            }
            if report.iter().all(|c| c.passed) {
                Ok(())
            } else {
                return ExitCode::FAILURE;
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
