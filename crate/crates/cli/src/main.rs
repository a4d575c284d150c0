//! `hrlab`: batch runs of the verification suites with CSV / JSON reports.

mod config;
mod experiments;
mod rows;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::RunConfig;
use rows::{Flag, Format, Metadata, Sink};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("computation failed: {0}")]
    Compute(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Parser)]
#[command(name = "hrlab", version, about = "Numerical checks of weighted Hardy-Rellich inequalities")]
struct Cli {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads.
    #[arg(long, global = true, env = "HRL_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// One-dimensional operator bounds and the quotient identity.
    #[command(name = "verify-1d")]
    Verify1d,
    /// Surrogate and radial chains, Hessian/Laplacian identity.
    #[command(name = "verify-decomp")]
    VerifyDecomp,
    /// Catalog constants and the tracked constant.
    Constants,
    /// p = 2 eigenproblems and critical-ratio maximization.
    Quotient,
    /// Rellich quotient along the degenerating family.
    Degeneracy,
    /// Plateau-family blow-up series.
    Stress,
    /// Critical ratios over a grid of families, dimensions and weights.
    Sweep,
    /// Summary of earlier CSV artifacts.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify1d => "verify-1d",
            Command::VerifyDecomp => "verify-decomp",
            Command::Constants => "constants",
            Command::Quotient => "quotient",
            Command::Degeneracy => "degeneracy",
            Command::Stress => "stress",
            Command::Sweep => "sweep",
            Command::Report => "report",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let started = Instant::now();
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Pool(e.to_string()))?;
    }
    let root = cli.seed.unwrap_or(cfg.seed);
    let name = cli.command.name();
    let mut sink = Sink::open(&cli.out, name)?;
    match cli.command {
        Command::Verify1d => experiments::verify_1d(&cfg, root, &mut sink)?,
        Command::VerifyDecomp => experiments::verify_decomp(&cfg, root, &mut sink)?,
        Command::Constants => experiments::constants(&cfg, root, &mut sink)?,
        Command::Quotient => experiments::quotient(&cfg, root, &mut sink)?,
        Command::Degeneracy => experiments::degeneracy(&cfg, root, &mut sink)?,
        Command::Stress => experiments::stress(&cfg, root, &mut sink)?,
        Command::Sweep => experiments::sweep(&cfg, root, &mut sink)?,
        Command::Report => experiments::report(&cfg, &cli.out, &mut sink)?,
    }
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    let meta = Metadata {
        config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
        seed: root,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time: started.elapsed().as_secs_f64(),
    };
    let ext = match cli.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = cli.out.join(format!("{name}.{ext}"));
    let rows = sink.finish(&path, cli.format, &meta)?;
    let count = |flag| rows.iter().filter(|r| r.flag == flag).count();
    let (pass, fail, explore) = (count(Flag::Pass), count(Flag::Fail), count(Flag::Exploratory));
    eprintln!(
        "{name}: {} rows ({pass} pass, {fail} fail, {explore} exploratory) -> {}",
        rows.len(),
        path.display()
    );
    for r in rows.iter().filter(|r| r.flag == Flag::Fail).take(20) {
        eprintln!(
            "  fail {} {} value={:e} bound={:e}",
            r.experiment,
            r.metric,
            r.value,
            r.bound.unwrap_or(f64::NAN)
        );
    }
    Ok(fail == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
