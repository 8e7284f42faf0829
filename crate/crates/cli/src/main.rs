mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use report::RunReport;

/// Scenario runner for wave dynamics on multiply-connected configuration
/// spaces: spectra, Crank-Nicolson evolution, Bohmian trajectories, ensemble
/// equivariance tests and exact algebra checks.
#[derive(Parser)]
#[command(name = "covbohm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed from the config (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the worker thread pool; defaults to the number of cores.
    /// Artifacts are byte-identical regardless.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenvalues of the twisted Hamiltonian.
    Spectrum(Common),
    /// Crank-Nicolson evolution with periodicity and norm checks.
    Evolve(Common),
    /// Bohmian trajectories with winding bookkeeping.
    Trajectories {
        #[command(flatten)]
        common: Common,
        /// Number of trajectories (overrides numerics.n_samples).
        #[arg(long)]
        n: Option<usize>,
        /// Integration horizon (overrides numerics.t_final).
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// |psi|^2 ensemble transport versus the evolved density.
    Equivariance(Common),
    /// Exact checks on characters, sections and commutants.
    AlgebraCheck(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            let msg = serde_json::json!({
                "error": format!("{err:#}"),
            });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (name, common) = match &cli.command {
        Command::Spectrum(c) => ("spectrum", c),
        Command::Evolve(c) => ("evolve", c),
        Command::Trajectories { common, .. } => ("trajectories", common),
        Command::Equivariance(c) => ("equivariance", c),
        Command::AlgebraCheck(c) => ("algebra-check", c),
    };
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    let mut cfg = config::load_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    std::fs::create_dir_all(&common.out)?;

    let scenario = common.config.display().to_string();
    let mut report = RunReport::new(name, &scenario, &cfg.raw_text, cfg.seed());
    let started = Instant::now();
    match &cli.command {
        Command::Spectrum(c) => commands::run_spectrum(&cfg, &c.out, &mut report)?,
        Command::Evolve(c) => commands::run_evolve(&cfg, &c.out, &mut report)?,
        Command::Trajectories { common, n, t_final } => {
            commands::run_trajectories(&cfg, &common.out, *n, *t_final, &mut report)?
        }
        Command::Equivariance(c) => commands::run_equivariance(&cfg, &c.out, &mut report)?,
        Command::AlgebraCheck(c) => commands::run_algebra(&cfg, &c.out, &mut report)?,
    }
    report.timing_ms = started.elapsed().as_millis() as u64;
    report.write(&common.out)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    // COVBOHM_LOG=quiet suppresses the per-check stdout lines; the report
    // file and exit code are unaffected
    let quiet = std::env::var("COVBOHM_LOG").is_ok_and(|v| v == "quiet" || v == "0");
    if !quiet {
        for c in &report.checks {
            let verdict = if c.pass { "pass" } else { "FAIL" };
            match c.threshold {
                Some(t) => {
                    println!("{name}: {} = {:.6e} (<= {:.1e}) {verdict}", c.name, c.value, t)
                }
                None => println!("{name}: {} = {:.6e} {verdict}", c.name, c.value),
            }
        }
    }
    Ok(report.all_pass())
}
