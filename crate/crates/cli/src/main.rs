mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "cvflab", version, about = "Conformal and Killing vector fields on Damek-Ricci and half-space models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Compare the generator Lie-derivative tables with the reference tables.
    VerifyFrames,
    /// Generate the conformal Killing system and match it against the
    /// transcribed equations.
    DeriveSystem,
    /// Busemann functions and their gradient fields.
    Busemann,
    /// Harmonic series elimination.
    Series,
    /// Collocation nullspaces in killing, conformal and homothetic mode.
    Nullspace,
    /// Every check with default parameters.
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Md,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Infinity,
    Boundary,
}

#[derive(clap::Args, Debug, Clone, Default)]
pub struct Opts {
    /// Builtin model (chn, ch2, rh, rh3, ...) or a JSON model file.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Series truncation order.
    #[arg(long = "M", global = true)]
    pub order: Option<usize>,
    /// Polynomial degree of the series coefficients.
    #[arg(long = "D", global = true)]
    pub poly_degree: Option<usize>,
    /// Ansatz degree for nullspace runs.
    #[arg(long, global = true)]
    pub degree: Option<u32>,
    /// Ansatz powers u^k with |k| <= K.
    #[arg(long = "k-range", global = true)]
    pub k_range: Option<u32>,
    #[arg(long, global = true, env = "CVFLAB_SEED")]
    pub seed: Option<u64>,
    /// Directory for report files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Replacement reference file for verify-frames or derive-system.
    #[arg(long, global = true)]
    pub fixture: Option<PathBuf>,
    /// Busemann kind; both when omitted.
    #[arg(long, global = true, value_enum)]
    pub kind: Option<Kind>,
    /// Boundary point, comma separated rationals.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<String>>,
    /// Nullspace experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn emit(outcome: &Outcome, opts: &Opts) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(&outcome.json).map_err(|e| CliError::Usage(e.to_string()))?;
    match opts.format.unwrap_or(Format::Md) {
        Format::Json => println!("{json}"),
        Format::Md => print!("{}", outcome.markdown),
    }
    if let Some(dir) = &opts.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
        let write = |ext: &str, body: &str| {
            let path = dir.join(format!("{}.{ext}", outcome.command));
            std::fs::write(&path, body).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
        };
        if opts.format != Some(Format::Md) {
            write("json", &(json.clone() + "\n"))?;
        }
        if opts.format != Some(Format::Json) {
            write("md", &outcome.markdown)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyFrames => commands::verify_frames(&cli.opts),
        Command::DeriveSystem => commands::derive_system(&cli.opts),
        Command::Busemann => commands::busemann(&cli.opts),
        Command::Series => commands::series(&cli.opts),
        Command::Nullspace => commands::nullspace(&cli.opts),
        Command::All => commands::all(&cli.opts),
    };
    let outcome = match result.and_then(|o| emit(&o, &cli.opts).map(|_| o)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}: FAIL", outcome.command);
        ExitCode::from(1)
    }
}
