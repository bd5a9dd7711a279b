use std::fs;
use std::path::{Path, PathBuf};

use cbdyn::analysis::{agreement_trajectory, categorize, histogram, OpinionCategory};
use cbdyn::baselines::{
    fg_trajectory, fj_trajectory, to_row_stochastic, traits_to_susceptibility, SusceptibilityVector,
};
use cbdyn::dynamics::{
    evolve_trajectory, EvolutionParams, InnerTraits, OpinionVector, TraitAssignment,
};
use cbdyn::fitting::{
    crossval, fit as run_fit, CandidateSets, CostMatrix, FitConfig, FitMode, Model, Quantization,
    QuestionDataset,
};
use cbdyn::graph::{metrics, GraphSpec, SignedDigraph, Topology};
use cbdyn::io::{
    dataset_from_surveys, export, read_opinions, read_traits, to_json, write_text, Artifact,
    Format, Resampling, SurveyTable,
};
use cbdyn::GeneralAgreement;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{FitArgs, GenerateArgs, SimulateArgs};
use crate::CliError;

fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::Usage(format!("missing required option --{flag}")))
}

fn output(explicit: &Option<PathBuf>, out_dir: &Path, default: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out_dir.join(default))
}

fn parse<T: std::str::FromStr<Err = cbdyn::Error>>(value: &str, flag: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|e: cbdyn::Error| CliError::Usage(format!("--{flag}: {e}")))
}

fn params(
    lambda: Option<f64>,
    xi: Option<f64>,
    mu: Option<f64>,
) -> Result<EvolutionParams, CliError> {
    let d = EvolutionParams::default();
    EvolutionParams::new(
        lambda.unwrap_or(d.lambda),
        xi.unwrap_or(d.xi),
        mu.unwrap_or(d.mu),
    )
    .map_err(|e| CliError::Usage(e.to_string()))
}

fn read_graph(path: &Path) -> Result<SignedDigraph, CliError> {
    let text = fs::read_to_string(path).map_err(cbdyn::Error::from)?;
    let graph = match Format::from_path(path) {
        Format::Json => serde_json::from_str(&text).map_err(cbdyn::Error::from)?,
        Format::Csv => SignedDigraph::from_edge_list(&text)?,
    };
    Ok(graph)
}

// ---------------------------------------------------------------------------

pub fn generate(a: &GenerateArgs, out_dir: &Path) -> Result<(), CliError> {
    let spec = GraphSpec {
        topology: parse::<Topology>(&required(&a.topology, "topology")?, "topology")?,
        n: required(&a.n, "n")?,
        k_in: a.k.unwrap_or(4),
        p_rewire: a.p_rewire.unwrap_or(0.1),
        p_positive: a.p_pos.unwrap_or(1.0),
    };
    let graph = spec.generate(a.seed.unwrap_or(0))?;
    let report = metrics(&graph)?;

    let graph_path = output(&a.output, out_dir, "graph.txt");
    let text = match Format::from_path(&graph_path) {
        Format::Json => to_json(&graph)?,
        Format::Csv => graph.to_edge_list(),
    };
    write_text(&graph_path, &text)?;
    let metrics_path = output(&a.metrics, out_dir, "metrics.json");
    export(
        Artifact::Metrics(&report),
        &metrics_path,
        Format::from_path(&metrics_path),
    )?;

    println!(
        "{} agents, {} off-diagonal edges ({} positive) -> {}",
        graph.size(),
        graph.nonzero_count() - graph.size(),
        report.positive_edges - graph.size(),
        graph_path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn load_traits(a: &SimulateArgs, n: usize) -> Result<Option<TraitAssignment>, CliError> {
    let Some(source) = &a.traits else {
        return Ok(None);
    };
    let traits = match source.as_str() {
        "stubborn" => TraitAssignment::uniform(n, InnerTraits::STUBBORN),
        "conformist" => TraitAssignment::uniform(n, InnerTraits::CONFORMIST),
        "radical" => TraitAssignment::uniform(n, InnerTraits::RADICAL),
        "random" => {
            let seed = a.traits_seed.or(a.seed).unwrap_or(0);
            TraitAssignment::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
        }
        path => read_traits(Path::new(path))?,
    };
    if traits.len() != n {
        return Err(cbdyn::Error::Dimension {
            expected: n,
            got: traits.len(),
        }
        .into());
    }
    Ok(Some(traits))
}

#[derive(Serialize)]
struct FinalSummary {
    model: Model,
    steps: usize,
    initial_category: OpinionCategory,
    final_category: OpinionCategory,
    final_histogram: Vec<usize>,
    final_agreement: GeneralAgreement,
    final_opinions: Vec<f64>,
}

pub fn simulate(a: &SimulateArgs, out_dir: &Path) -> Result<(), CliError> {
    let graph = read_graph(&required(&a.graph, "graph")?)?;
    let n = graph.size();
    let initial = match (&a.initial, a.seed) {
        (Some(path), _) => read_opinions(path)?,
        (None, Some(seed)) => OpinionVector::uniform(n, &mut ChaCha8Rng::seed_from_u64(seed)),
        (None, None) => {
            return Err(CliError::Usage(
                "give --initial <FILE> or --seed <N>".into(),
            ));
        }
    };
    if initial.len() != n {
        return Err(cbdyn::Error::Dimension {
            expected: n,
            got: initial.len(),
        }
        .into());
    }
    let model = parse::<Model>(a.model.as_deref().unwrap_or("cb"), "model")?;
    let steps = a.steps.unwrap_or(50);
    let traits = load_traits(a, n)?;

    let states = match model {
        Model::Cb => {
            let traits =
                traits.ok_or_else(|| CliError::Usage("--model cb needs --traits".into()))?;
            evolve_trajectory(
                &initial,
                &graph,
                &traits,
                &params(a.lambda, a.xi, a.mu)?,
                steps,
            )?
        }
        Model::Fj => {
            let susceptibility = match (a.susceptibility, &traits) {
                (Some(s), _) => SusceptibilityVector::constant(n, s)
                    .map_err(|e| CliError::Usage(format!("--susceptibility: {e}")))?,
                (None, Some(t)) => traits_to_susceptibility(t),
                (None, None) => {
                    return Err(CliError::Usage(
                        "--model fj needs --susceptibility or --traits".into(),
                    ))
                }
            };
            fj_trajectory(
                &initial,
                &to_row_stochastic(&graph)?,
                &susceptibility,
                steps,
            )?
        }
        Model::Fg => fg_trajectory(&initial, &to_row_stochastic(&graph)?, steps)?,
        Model::Null => vec![initial.clone(); steps + 1],
    };
    let curve = agreement_trajectory(&states);
    let last = states.last().expect("trajectory holds the initial state");

    let summary = FinalSummary {
        model,
        steps,
        initial_category: categorize(&initial)?,
        final_category: categorize(last)?,
        final_histogram: histogram(last).to_vec(),
        final_agreement: *curve.last().expect("one point per state"),
        final_opinions: last.to_vec(),
    };

    let trajectory_path = output(&a.trajectory, out_dir, "trajectory.csv");
    export(
        Artifact::Trajectory(&states),
        &trajectory_path,
        Format::from_path(&trajectory_path),
    )?;
    let agreement_path = output(&a.agreement, out_dir, "agreement.csv");
    export(
        Artifact::Agreement(&curve),
        &agreement_path,
        Format::from_path(&agreement_path),
    )?;
    write_text(
        &output(&a.summary, out_dir, "final.json"),
        &to_json(&summary)?,
    )?;

    println!(
        "{steps} steps: {} -> {}",
        summary.initial_category, summary.final_category
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn load_dataset(a: &FitArgs) -> Result<QuestionDataset, CliError> {
    if let Some(path) = &a.dataset {
        let text = fs::read_to_string(path).map_err(cbdyn::Error::from)?;
        return serde_json::from_str(&text)
            .map_err(|e| cbdyn::Error::Schema(format!("{}: {e}", path.display())).into());
    }
    match (&a.survey_initial, &a.survey_final) {
        (Some(early), Some(late)) => {
            let early = SurveyTable::from_path(early, "initial", "")?;
            let late = SurveyTable::from_path(late, "final", "")?;
            let questions: Vec<&str> = a.questions.iter().flatten().map(String::as_str).collect();
            Ok(dataset_from_surveys(
                &early,
                &late,
                &questions,
                a.agents.unwrap_or(100),
                Resampling::Quantile,
            )?)
        }
        _ => Err(CliError::Usage(
            "give --dataset <FILE> or --survey-initial and --survey-final".into(),
        )),
    }
}

fn load_candidates(a: &FitArgs, n: usize) -> Result<CandidateSets, CliError> {
    if let Some(path) = &a.candidates {
        let text = fs::read_to_string(path).map_err(cbdyn::Error::from)?;
        let sets: CandidateSets = serde_json::from_str(&text).map_err(cbdyn::Error::from)?;
        sets.validate()
            .map_err(|e| cbdyn::Error::Schema(format!("{}: {e}", path.display())))?;
        return Ok(sets);
    }
    let spec = GraphSpec {
        topology: parse::<Topology>(a.topology.as_deref().unwrap_or("small-world"), "topology")?,
        n,
        k_in: a.k.unwrap_or(4),
        p_rewire: a.p_rewire.unwrap_or(0.1),
        p_positive: a.p_pos.unwrap_or(0.77),
    };
    Ok(CandidateSets::generate(
        &spec,
        a.networks.unwrap_or(5),
        a.assignments.unwrap_or(20),
        a.seed.unwrap_or(0),
    )?)
}

fn parse_quantization(value: &str) -> Result<Quantization, CliError> {
    match value {
        "printed" => Ok(Quantization::Printed),
        "midpoints" => Ok(Quantization::Midpoints),
        other => Err(CliError::Usage(format!(
            "--quantization: unknown level set '{other}'"
        ))),
    }
}

pub fn fit(a: &FitArgs, out_dir: &Path) -> Result<(), CliError> {
    let mode = a.mode.as_deref().unwrap_or("free");
    if !["free", "constrained", "crossval"].contains(&mode) {
        return Err(CliError::Usage(format!("--mode: unknown mode '{mode}'")));
    }
    let config = FitConfig {
        params: params(a.lambda, a.xi, a.mu)?,
        steps: a.steps.unwrap_or(50),
        model: parse::<Model>(a.model.as_deref().unwrap_or("cb"), "model")?,
        quantization: parse_quantization(a.quantization.as_deref().unwrap_or("printed"))?,
        workers: a.workers,
    };
    if config.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }

    let data = load_dataset(a)?;
    let n = data
        .population()
        .ok_or(cbdyn::Error::Empty("dataset questions"))?;
    let candidates = load_candidates(a, n)?;
    if let Some(path) = &a.save_candidates {
        write_text(path, &to_json(&candidates)?)?;
    }

    if mode == "crossval" {
        let report = crossval(&data, &candidates, &config, a.folds.unwrap_or(6))?;
        write_text(&out_dir.join("crossval.csv"), &report.to_csv())?;
        write_text(&out_dir.join("crossval.json"), &to_json(&report)?)?;
        println!(
            "{} folds, mean test cost {}",
            report.folds.len(),
            report.grand_mean
        );
        return Ok(());
    }

    let fit_mode = if mode == "free" {
        FitMode::Free
    } else {
        FitMode::Constrained
    };
    let result = run_fit(fit_mode, &data, &candidates, &config)?;
    let matrix = CostMatrix::from_fit(&result, "cost");
    export(
        Artifact::Fit(&result),
        &out_dir.join("fit_result.json"),
        Format::Json,
    )?;
    write_text(&out_dir.join("cost_matrix.csv"), &matrix.to_csv())?;
    write_text(&out_dir.join("cost_status.csv"), &matrix.to_status_csv())?;
    println!(
        "total cost {}, {} of {} questions accepted, network {}",
        result.total_cost,
        result.accepted_count,
        data.len(),
        result.chosen_network
    );
    Ok(())
}
