use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "cbdyn",
    version,
    about = "Signed-network opinion dynamics: generate, simulate, fit"
)]
pub struct Cli {
    /// JSON file with one object per command ("generate", "simulate", "fit");
    /// keys are flag names, and flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for outputs that are not given an explicit path.
    #[arg(long, global = true, env = "CBDYN_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a signed digraph and report its metrics.
    Generate(GenerateArgs),
    /// Run one model from an initial state and record the trajectory.
    Simulate(SimulateArgs),
    /// Fit candidate networks and trait assignments to a survey dataset.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenerateArgs {
    /// complete, ring, lattice or small-world.
    #[arg(long)]
    pub topology: Option<String>,
    /// Number of agents.
    #[arg(long)]
    pub n: Option<usize>,
    /// In-degree (lattice and small-world).
    #[arg(long)]
    pub k: Option<usize>,
    /// Rewiring probability (small-world) [default: 0.1].
    #[arg(long)]
    pub p_rewire: Option<f64>,
    /// Probability that an edge is positive [default: 1].
    #[arg(long)]
    pub p_pos: Option<f64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Graph file; `.json` writes a dense matrix, anything else an edge list
    /// [default: <out-dir>/graph.txt].
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Metrics report, `.json` or `.csv` [default: <out-dir>/metrics.json].
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Graph file (edge list or JSON).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Initial opinions (CSV with an `opinion` column, or JSON array).
    #[arg(long, conflicts_with = "seed")]
    pub initial: Option<PathBuf>,
    /// Draw initial opinions uniformly with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trait file, or a preset: stubborn, conformist, radical, random.
    #[arg(long)]
    pub traits: Option<String>,
    /// Seed for `--traits random` [default: the initial-opinion seed, or 0].
    #[arg(long)]
    pub traits_seed: Option<u64>,
    /// cb, fj, fg or null [default: cb].
    #[arg(long)]
    pub model: Option<String>,
    /// Uniform FJ susceptibility; otherwise derived from the traits.
    #[arg(long)]
    pub susceptibility: Option<f64>,
    /// Number of steps [default: 50].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Step size [default: 0.4].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Weight of strong (dis)agreement [default: 2].
    #[arg(long)]
    pub xi: Option<f64>,
    /// Radicalization gain [default: 5].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Trajectory output [default: <out-dir>/trajectory.csv].
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Agreement-curve output [default: <out-dir>/agreement.csv].
    #[arg(long)]
    pub agreement: Option<PathBuf>,
    /// Final-state summary [default: <out-dir>/final.json].
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FitArgs {
    /// Dataset JSON: {"questions": [{"label", "initial", "final"}, ...]}.
    #[arg(long, conflicts_with_all = ["survey_initial", "survey_final"])]
    pub dataset: Option<PathBuf>,
    /// Survey CSV of the earlier wave (one column per question, answers 1..10).
    #[arg(long, requires = "survey_final")]
    pub survey_initial: Option<PathBuf>,
    /// Survey CSV of the later wave.
    #[arg(long, requires = "survey_initial")]
    pub survey_final: Option<PathBuf>,
    /// Comma-separated survey columns to use [default: all].
    #[arg(long, value_delimiter = ',')]
    pub questions: Option<Vec<String>>,
    /// Agents per resampled survey distribution [default: 100].
    #[arg(long)]
    pub agents: Option<usize>,
    /// Candidate sets JSON; otherwise generated from the flags below.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    /// Number of generated candidate networks [default: 5].
    #[arg(long)]
    pub networks: Option<usize>,
    /// Number of generated candidate trait assignments [default: 20].
    #[arg(long)]
    pub assignments: Option<usize>,
    /// Topology of generated networks [default: small-world].
    #[arg(long)]
    pub topology: Option<String>,
    /// In-degree of generated networks [default: 4].
    #[arg(long)]
    pub k: Option<usize>,
    /// Rewiring probability of generated networks [default: 0.1].
    #[arg(long)]
    pub p_rewire: Option<f64>,
    /// Positive-edge probability of generated networks [default: 0.77].
    #[arg(long)]
    pub p_pos: Option<f64>,
    /// Seed for candidate generation [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// free, constrained or crossval [default: free].
    #[arg(long)]
    pub mode: Option<String>,
    /// Folds for crossval [default: 6].
    #[arg(long)]
    pub folds: Option<usize>,
    /// cb, fj, fg or null [default: cb].
    #[arg(long)]
    pub model: Option<String>,
    /// Steps per simulated question [default: 50].
    #[arg(long)]
    pub steps: Option<usize>,
    /// printed or midpoints [default: printed].
    #[arg(long)]
    pub quantization: Option<String>,
    /// Worker threads; the result does not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Also write the generated candidate sets to this JSON file.
    #[arg(long)]
    pub save_candidates: Option<PathBuf>,
}

/// Overlays the flags that were given onto the matching config section.
pub fn merge<T>(flags: &T, config: Option<&Value>, section: &str) -> Result<T, CliError>
where
    T: Serialize + DeserializeOwned + Clone,
{
    let Some(section_value) = config.and_then(|c| c.get(section)) else {
        return Ok(flags.clone());
    };
    let Value::Object(mut merged) = section_value.clone() else {
        return Err(CliError::Usage(format!(
            "config section '{section}' must be an object"
        )));
    };
    if let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") {
        merged.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("config section '{section}': {e}")))
}
