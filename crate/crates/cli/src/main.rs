use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdirac_cli::commands::{cmd_eigen, cmd_report, cmd_solve, cmd_spectrum, cmd_verify};
use pdirac_cli::{CliError, Method, Overrides, RunConfig, Suite};

/// Spectral p-Dirac studies on flat spin tori.
#[derive(Parser)]
#[command(name = "pdirac", version)]
struct Cli {
    /// Run configuration (JSON), or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Allow p outside (1, m) and all-periodic spin structures.
    #[arg(long, global = true)]
    override_p_range: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest Dirac eigenvalues with their modes.
    Spectrum,
    /// First nonlinear eigenpair and the Galerkin/deflation sequence.
    Eigen,
    /// Critical points of the energy functional.
    Solve {
        /// Overrides `method` from the config.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Invariant suites; exits 4 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Model summary: levels, growth conditions, constant branch.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut base = base;
    if let Command::Solve { method: Some(m) } = &cli.command {
        base.method = *m;
    }
    let overrides = Overrides { seed: cli.seed, out: cli.out.clone(), override_p_range: cli.override_p_range };
    let config = base.resolve(&overrides)?;
    let files = match cli.command {
        Command::Spectrum => cmd_spectrum(&config)?,
        Command::Eigen => cmd_eigen(&config)?,
        Command::Solve { .. } => cmd_solve(&config)?,
        Command::Verify { suite } => {
            let (files, checks) = cmd_verify(&config, suite)?;
            let mut stdout = std::io::stdout().lock();
            for c in &checks {
                let op = if c.relation == "le" { "<=" } else { ">" };
                // a closed pipe is not worth failing the run over
                let _ = writeln!(
                    stdout,
                    "{}  {:<9} {:<34} {:>24} {op} {:e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.suite,
                    c.name,
                    format!("{:e}", c.value),
                    c.bound
                );
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                return Err(CliError::Verify(format!("{failed} of {} checks failed", checks.len())));
            }
            files
        }
        Command::Report => {
            let (files, report) = cmd_report(&config)?;
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            files
        }
    };
    for f in files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
