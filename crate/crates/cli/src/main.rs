use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nonlocal_cli::{commands, execute, load, CliError, Command, Status};

#[derive(Parser)]
#[command(name = "nonlocal", version, about = "Nonlinear nonlocal diffusion on a periodic lattice")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (overrides `seed` and every profile seed derived from it).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Check the configured kernel against the axioms by sampling.
    Validate,
    /// Evolve the initial profile and check conservation and decay.
    Run,
    /// Evolve two initial profiles and check contraction and comparison.
    Compare,
    /// Solve for a decreasing list of regularization radii and tabulate Cauchy distances.
    Converge,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Status::ConfigError.code() as u8) } else { ExitCode::SUCCESS };
        }
    };
    let status = match real_main(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    };
    ExitCode::from(status.code() as u8)
}

fn real_main(cli: &Cli) -> Result<Status, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let config = load(path, cli.seed)?;
    let command = match cli.command {
        Cmd::Validate => Command::Validate,
        Cmd::Run => Command::Run,
        Cmd::Compare => Command::Compare,
        Cmd::Converge => Command::Converge,
    };
    let out = commands::output_dir(&config, cli.out.as_deref());
    execute(command, &config, &out)
}
