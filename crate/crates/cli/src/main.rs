use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use complace_cli::{run, CliError, CliResult, Command, Invocation, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "complace",
    version,
    about = "Optimal placement of Dirichlet balls for compliance"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run folder; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Dotted-path override, e.g. `optimizer.max_iterations=100`.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Solve the Poisson problem for one configuration.
    Solve,
    /// Optimize ball centers.
    Optimize,
    /// Sweep the cell constant over α with bounds and diagnostics.
    Theta,
    /// Solve the limit density problem.
    Limit,
    /// Compare finite-n optima with the limit density.
    Compare,
    /// One-dimensional closed forms.
    Exact1d,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Solve => Command::Solve,
            Sub::Optimize => Command::Optimize,
            Sub::Theta => Command::Theta,
            Sub::Limit => Command::Limit,
            Sub::Compare => Command::Compare,
            Sub::Exact1d => Command::Exact1d,
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let raw =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = RunConfig::parse(&raw, &cli.overrides).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(t) = cli.threads {
        config.threads = Some(t);
    }
    let base = path.parent().map(|p| p.to_path_buf());
    let inv = Invocation::new(config, raw, base, cli.out.clone());
    let command = Command::from(cli.command);
    let record = run(command, &inv)?;
    println!(
        "{} finished: {} artifacts in {}",
        record.command,
        record.artifacts.len(),
        inv.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
