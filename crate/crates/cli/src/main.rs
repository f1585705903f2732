use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("physics error: {0}")]
    Physics(#[from] fluxbec::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fluxbec",
    version,
    about = "Flux-loop / BEC atom-chip simulation"
)]
struct Cli {
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// |B| maps over the horizontal plane through the trap minimum (fig3, fig4).
    Field,
    /// Trap minimum, frequencies, axial profiles and fit (fig2a, fig2b).
    Trap,
    /// Perturbation amplitude against loop distance (fig5).
    Sweep,
    /// Branch dynamics while the perturbation ramps on.
    Evolve,
    /// Time-of-flight densities and entanglement measures.
    Tof,
    /// Collect the manifest and every summary into report.json.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Field => "field",
            Command::Trap => "trap",
            Command::Sweep => "sweep",
            Command::Evolve => "evolve",
            Command::Tof => "tof",
            Command::Report => "report",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    let exec = fluxbec::exec::configure_threads(cli.threads)
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    let mut out = output::Output::create(&PathBuf::from(&cfg.output_dir), &cfg.hash())?;
    let ctx = commands::Context { cfg: &cfg, exec };
    match cli.command {
        Command::Field => commands::field(&ctx, &mut out)?,
        Command::Trap => commands::trap(&ctx, &mut out)?,
        Command::Sweep => commands::sweep(&ctx, &mut out)?,
        Command::Evolve => commands::evolve(&ctx, &mut out).map(|_| ())?,
        Command::Tof => commands::tof(&ctx, &mut out)?,
        Command::Report => commands::report(&ctx, &mut out)?,
    }
    out.finish(cli.command.name())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    std::panic::set_hook(Box::new(|info| {
        eprintln!("fluxbec: internal error: {info}");
    }));
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("fluxbec: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
