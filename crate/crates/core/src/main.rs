use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use coherent_control::cli::{self, Command};
use coherent_control::config::{parse_config_with, Defaults};
use coherent_control::{Category, Error};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Bath coefficients and Rabi frequencies.
    Coeffs,
    /// Time evolution of the density matrix.
    Evolve,
    /// Stationary state(s) and spectral gap.
    Steady,
    /// Laser design for a target dark state.
    Design,
}

/// Master-equation toolkit for laser-driven few-level atoms.
#[derive(Debug, Parser)]
#[command(name = "coherent-control", version)]
struct Args {
    command: Cmd,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output] dir`, defaults to `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 4 when the stationary state is not unique.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            let cat = e.category();
            eprintln!("error[{}]: {e}", cat.name());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}

fn run(args: &Args) -> Result<ExitCode, Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let base = args.config.parent();
    let config = parse_config_with(&text, base, &Defaults::from_env()?)?;
    let command = match args.command {
        Cmd::Coeffs => Command::Coeffs,
        Cmd::Evolve => Command::Evolve,
        Cmd::Steady => Command::Steady,
        Cmd::Design => Command::Design,
    };
    let out = cli::run(command, &config)?;
    let dir = args
        .out
        .clone()
        .or_else(|| {
            config.output.dir.as_ref().map(|d| match base {
                Some(b) if d.is_relative() => b.join(d),
                _ => d.clone(),
            })
        })
        .unwrap_or_else(|| PathBuf::from("."));
    for path in cli::write_artifacts(&dir, &out)? {
        println!("{}", path.display());
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    if out.degenerate && (args.strict || config.output.strict_degeneracy) {
        eprintln!(
            "error[{}]: stationary state is not unique (strict mode)",
            Category::Degenerate.name()
        );
        return Ok(ExitCode::from(Category::Degenerate.exit_code() as u8));
    }
    Ok(ExitCode::SUCCESS)
}
