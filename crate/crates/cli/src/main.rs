//! `l2field`: run a verification suite from a JSON config.
//!
//! Exit status: 0 when every check passes, 1 when a check fails or the
//! numerics break down, 2 on usage, configuration or I/O errors.

mod config;
mod emit;
mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use run::{execute, Artifact, ReportBundle};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(l2field::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<l2field::Error> for CliError {
    fn from(e: l2field::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(l2field::Error::Numeric { .. } | l2field::Error::NotRepresentable { .. }) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "l2field", version, about = "Covariance, stationarity and self-similarity checks for fractional Brownian fields")]
struct Cli {
    /// JSON run configuration; its "command" field selects the suite.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Command to run with default settings when no config is given (only `all` needs none).
    command: Option<String>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json, reports.csv, config.json and data CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the report on stdout.
    #[arg(long)]
    quiet: bool,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let text = match (&cli.config, &cli.command) {
        (Some(path), None) => fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        (None, Some(cmd)) => serde_json::json!({ "command": cmd }).to_string(),
        (Some(_), Some(_)) => return Err(CliError::Config("give either --config or a command, not both".into())),
        (None, None) => return Err(CliError::Config("no --config given".into())),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
}

fn write_outputs(dir: &Path, bundle: &ReportBundle) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    emit::write_json(&dir.join("report.json"), bundle)?;
    emit::write_json(&dir.join("config.json"), &bundle.config)?;
    emit::write_reports(&dir.join("reports.csv"), &bundle.reports)?;
    for a in &bundle.artifacts {
        match a {
            Artifact::Matrix(name, m) => emit::write_matrix(&dir.join(name), m)?,
            Artifact::Paths(name, m) => emit::write_paths(&dir.join(name), m)?,
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut config = load_config(cli)?;
    config.validate()?;
    let seed = config.resolve_seed(cli.seed)?;
    let bundle = match l2field::seeding::threads_from_env() {
        Some(n) => l2field::seeding::with_threads(n, || execute(config, seed))??,
        None => execute(config, seed)?,
    };
    if !cli.quiet {
        for c in &bundle.criteria {
            eprintln!("{}", c.line());
        }
        let text = serde_json::to_string_pretty(&bundle).map_err(|e| CliError::Io(e.to_string()))?;
        let mut stdout = std::io::stdout().lock();
        writeln!(stdout, "{text}").map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(dir) = &cli.out {
        write_outputs(dir, &bundle)?;
    }
    Ok(bundle.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(true)) => ExitCode::from(0),
        Ok(Ok(false)) => ExitCode::from(1),
        Ok(Err(e)) => {
            eprintln!("l2field: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => {
            eprintln!("l2field: internal error");
            ExitCode::from(2)
        }
    }
}
