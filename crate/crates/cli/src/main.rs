use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tomocal_cli::{execute, load_for, CliError, ExperimentConfig, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "tomocal", version, about = "Self-calibrating qubit tomography experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides outputDir in the config)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Root seed (overrides seed in the config)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads
    #[arg(long, global = true, value_name = "N", env = "TOMOCAL_THREADS")]
    threads: Option<usize>,

    /// Skip SVG figures
    #[arg(long, global = true)]
    no_figures: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run any scenario
    Run { config: PathBuf },
    /// Cost landscapes of several probe sets
    Landscape { config: PathBuf },
    /// Rotating-waveplate polarimetry scan
    Polarimeter { config: PathBuf },
    /// Integrated-chip calibration
    Chip { config: PathBuf },
    /// Built-in additive-error simulation study
    DemoAdditive,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tomocal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = match &cli.command {
        Command::Run { config } => load_for(config, None)?,
        Command::Landscape { config } => load_for(config, Some(Scenario::Landscape))?,
        Command::Polarimeter { config } => load_for(config, Some(Scenario::Polarimeter))?,
        Command::Chip { config } => load_for(config, Some(Scenario::Chip))?,
        Command::DemoAdditive => ExperimentConfig::demo_additive(),
    };
    let opts = RunOptions {
        out: cli.out,
        seed: cli.seed,
        figures: !cli.no_figures,
    };
    let (dir, summary) = execute(cfg, &opts)?;
    println!(
        "{:?}: {} trial(s), {} failed, results in {}",
        summary.scenario,
        summary.total_trials,
        summary.failed_trials,
        dir.display()
    );
    Ok(())
}
