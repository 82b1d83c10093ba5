use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pompkit_cli::{cmd_mif2, cmd_pfilter, cmd_profile, cmd_simulate, exit_code, RunConfig};

#[derive(Parser)]
#[command(name = "pompkit")]
#[command(about = "Simulation-based likelihood inference for POMP epidemic models")]
#[command(version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's worker-thread count (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one realization, writing data.csv and states.csv
    Simulate,
    /// Replicated particle-filter likelihood evaluation at the configured
    /// parameters
    Pfilter,
    /// Multi-start iterated-filtering maximization with candidate ranking
    Mif2,
    /// Profile likelihood and adjusted confidence intervals per target
    Profile,
}

fn run(cli: &Cli) -> pompkit_core::Result<()> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| pompkit_core::Error::Config("--config is required".into()))?;
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.workers > 0 {
        builder = builder.num_threads(config.workers);
    }
    let pool = builder
        .build()
        .map_err(|e| pompkit_core::Error::Config(format!("worker pool: {e}")))?;

    pool.install(|| match cli.command {
        Command::Simulate => cmd_simulate(&config).map(drop),
        Command::Pfilter => cmd_pfilter(&config).map(drop),
        Command::Mif2 => cmd_mif2(&config).map(drop),
        Command::Profile => cmd_profile(&config).map(drop),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
