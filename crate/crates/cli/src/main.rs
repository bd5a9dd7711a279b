mod args;
mod commands;

use std::fs;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use args::{merge, Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(cbdyn::Error),
}

impl From<cbdyn::Error> for CliError {
    fn from(e: cbdyn::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_data_error() => 3,
            CliError::Core(e) if e.is_numeric_error() => 4,
            // mismatched sizes between input files are a data problem
            CliError::Core(cbdyn::Error::Dimension { .. }) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

const SECTIONS: [&str; 3] = ["generate", "simulate", "fit"];

fn load_config(cli: &Cli) -> Result<Option<Value>, CliError> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(map) = &value else {
        return Err(CliError::Usage("config must be a JSON object".into()));
    };
    if let Some(key) = map.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(CliError::Usage(format!("unknown config section '{key}'")));
    }
    Ok(Some(value))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli)?;
    let out_dir = cli.out_dir.as_path();
    match &cli.command {
        Command::Generate(a) => {
            commands::generate(&merge(a, config.as_ref(), "generate")?, out_dir)
        }
        Command::Simulate(a) => {
            commands::simulate(&merge(a, config.as_ref(), "simulate")?, out_dir)
        }
        Command::Fit(a) => commands::fit(&merge(a, config.as_ref(), "fit")?, out_dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
