use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ergodic::commands::{cmd_simulate, cmd_solve, cmd_sweep, cmd_table, cmd_validate, Context, Outcome};
use ergodic::config::{Format, RunConfig};
use ergodic::Error;

/// Optimal thresholds for ergodic impulse control under Poisson-constrained
/// intervention.
#[derive(Debug, Parser)]
#[command(name = "ergodic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory; defaults to the config's output.dir, then ".".
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Overrides the simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for y* and β at one intensity.
    Solve,
    /// Solve over an intensity list.
    Sweep,
    /// Monte Carlo check of the solved policy.
    Simulate,
    /// Assumption and variational-inequality checks.
    Validate,
    /// Reproduce a built-in reference table (verhulst or ou).
    Table { name: String },
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    RunConfig::load(path)
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    let config = match cli.command {
        Command::Table { .. } => None,
        _ => Some(load(cli)?),
    };
    let ctx = Context {
        output: cli
            .output
            .clone()
            .or_else(|| config.as_ref().and_then(|c| c.output_dir().map(PathBuf::from)))
            .unwrap_or_else(|| PathBuf::from(".")),
        format: cli.format.or(config.as_ref().map(|c| c.format())).unwrap_or(Format::Both),
        seed: cli.seed,
    };
    match (&cli.command, &config) {
        (Command::Solve, Some(c)) => cmd_solve(c, &ctx),
        (Command::Sweep, Some(c)) => cmd_sweep(c, &ctx),
        (Command::Simulate, Some(c)) => cmd_simulate(c, &ctx),
        (Command::Validate, Some(c)) => cmd_validate(c, &ctx),
        (Command::Table { name }, _) => cmd_table(name, &ctx),
        (_, None) => unreachable!("config loaded for every command but table"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for path in &outcome.artifacts {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
