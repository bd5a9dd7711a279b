//! Inverse-problem fitting by exhaustive search over finite candidate sets.
//!
//! The cost between a real and a predicted opinion vector quantizes both
//! onto a fixed set of reported levels, sorts each in descending order, and
//! sums the absolute differences, so only the shape of the distribution
//! matters. The free search picks one network and a per-question trait
//! assignment; the constrained search shares one assignment across all
//! questions. Ties are broken by the lowest candidate index, which keeps the
//! result independent of how the work is split across threads.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    fg_evolve, fj_evolve, to_row_stochastic, traits_to_susceptibility, StochasticDigraph,
    SusceptibilityVector,
};
use crate::dynamics::{evolve, EvolutionParams, OpinionVector, TraitAssignment};
use crate::graph::{GraphSpec, SignedDigraph};
use crate::{Error, Result};

/// Questions with cost strictly below this are reported as accepted.
pub const ACCEPTANCE_THRESHOLD: f64 = 7.0;

pub const DEFAULT_STEPS: usize = 50;

/// Nine reported levels: midpoints of consecutive points of the grid
/// `-1 + 0.2 k`, `k = 1..=10`.
pub const LEVELS_PRINTED: [f64; 9] = [-0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9];

/// Ten Likert bin midpoints `(2v - 11) / 10`.
pub const LEVELS_MIDPOINTS: [f64; 10] = [-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantization {
    #[default]
    Printed,
    Midpoints,
}

impl Quantization {
    pub fn levels(self) -> &'static [f64] {
        match self {
            Quantization::Printed => &LEVELS_PRINTED,
            Quantization::Midpoints => &LEVELS_MIDPOINTS,
        }
    }
}

/// Nearest level; on an exact tie the smaller level wins.
pub fn quantize_value(v: f64, q: Quantization) -> Result<f64> {
    if !(-1.0..=1.0).contains(&v) {
        return Err(Error::Range {
            value: v,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let levels = q.levels();
    let mut best = levels[0];
    let mut best_dist = (best - v).abs();
    for &level in &levels[1..] {
        let d = (level - v).abs();
        if d < best_dist {
            best = level;
            best_dist = d;
        }
    }
    Ok(best)
}

pub fn quantize(x: &[f64]) -> Result<Vec<f64>> {
    quantize_with(x, Quantization::Printed)
}

pub fn quantize_with(x: &[f64], q: Quantization) -> Result<Vec<f64>> {
    x.iter().map(|&v| quantize_value(v, q)).collect()
}

pub fn cost(real: &[f64], predicted: &[f64]) -> Result<f64> {
    cost_with(real, predicted, Quantization::Printed)
}

pub fn cost_with(real: &[f64], predicted: &[f64], q: Quantization) -> Result<f64> {
    if real.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: real.len(),
            got: predicted.len(),
        });
    }
    let sorted_desc = |x: &[f64]| -> Result<Vec<f64>> {
        let mut v = quantize_with(x, q)?;
        v.sort_by(|a, b| b.total_cmp(a));
        Ok(v)
    };
    let r = sorted_desc(real)?;
    let y = sorted_desc(predicted)?;
    Ok(r.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum())
}

// ---------------------------------------------------------------------------
// Data and candidates

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub label: String,
    pub initial: OpinionVector,
    #[serde(rename = "final")]
    pub last: OpinionVector,
}

/// Observed (initial, final) opinion pairs, one per question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct QuestionDataset {
    questions: Vec<Question>,
}

#[derive(Deserialize)]
struct RawDataset {
    questions: Vec<Question>,
}

impl TryFrom<RawDataset> for QuestionDataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        QuestionDataset::new(raw.questions)
    }
}

impl QuestionDataset {
    pub fn new(questions: Vec<Question>) -> Result<Self> {
        if let Some(first) = questions.first() {
            let n = first.initial.len();
            for q in &questions {
                for len in [q.initial.len(), q.last.len()] {
                    if len != n {
                        return Err(Error::Dimension {
                            expected: n,
                            got: len,
                        });
                    }
                }
            }
        }
        Ok(QuestionDataset { questions })
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn population(&self) -> Option<usize> {
        self.questions.first().map(|q| q.initial.len())
    }

    pub fn labels(&self) -> Vec<String> {
        self.questions.iter().map(|q| q.label.clone()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        QuestionDataset {
            questions: indices.iter().map(|&i| self.questions[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSets {
    pub networks: Vec<SignedDigraph>,
    pub assignments: Vec<TraitAssignment>,
}

impl CandidateSets {
    pub fn new(networks: Vec<SignedDigraph>, assignments: Vec<TraitAssignment>) -> Result<Self> {
        let sets = CandidateSets {
            networks,
            assignments,
        };
        sets.validate()?;
        Ok(sets)
    }

    pub fn validate(&self) -> Result<()> {
        if self.networks.is_empty() {
            return Err(Error::Empty("candidate networks"));
        }
        if self.assignments.is_empty() {
            return Err(Error::Empty("candidate assignments"));
        }
        let n = self.networks[0].size();
        for g in &self.networks {
            if g.size() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: g.size(),
                });
            }
        }
        for a in &self.assignments {
            if a.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: a.len(),
                });
            }
        }
        Ok(())
    }

    pub fn population(&self) -> usize {
        self.networks[0].size()
    }

    /// `networks` digraphs from `spec` with seeds `seed, seed + 1, ...` and
    /// `assignments` random assignments (see [`random_assignments`]).
    pub fn generate(
        spec: &GraphSpec,
        networks: usize,
        assignments: usize,
        seed: u64,
    ) -> Result<Self> {
        let nets = (0..networks as u64)
            .map(|k| spec.generate(seed.wrapping_add(k)))
            .collect::<Result<Vec<_>>>()?;
        let asg = random_assignments(spec.n, assignments, seed ^ 0x5eed_a551_6e00_0000);
        Self::new(nets, asg)
    }

    /// True when every assignment's trait rotation is also present.
    pub fn is_rotation_closed(&self) -> bool {
        self.assignments
            .iter()
            .all(|a| self.assignments.contains(&a.rotated()))
    }
}

/// Per-agent uniform simplex draws, emitted in groups of three cyclic
/// rotations `(a, b, c), (c, a, b), (b, c, a)` of each base draw. The set is
/// closed under rotation whenever `count` is a multiple of three.
pub fn random_assignments(n: usize, count: usize, seed: u64) -> Vec<TraitAssignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let base = TraitAssignment::random(n, &mut rng);
        let once = base.rotated();
        let twice = once.rotated();
        out.extend([base, once, twice]);
    }
    out.truncate(count);
    out
}

// ---------------------------------------------------------------------------
// Search

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Cb,
    Fj,
    Fg,
    Null,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cb" => Ok(Model::Cb),
            "fj" => Ok(Model::Fj),
            "fg" => Ok(Model::Fg),
            "null" => Ok(Model::Null),
            other => Err(Error::Parameter(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Free,
    Constrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub params: EvolutionParams,
    pub steps: usize,
    pub model: Model,
    pub quantization: Quantization,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            params: EvolutionParams::default(),
            steps: DEFAULT_STEPS,
            model: Model::Cb,
            quantization: Quantization::Printed,
            workers: None,
        }
    }
}

impl FitConfig {
    pub fn with_model(model: Model) -> Self {
        FitConfig {
            model,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub mode: FitMode,
    pub model: Model,
    pub chosen_network: usize,
    /// One index in constrained mode, one per question in free mode.
    pub chosen_assignments: Vec<usize>,
    pub labels: Vec<String>,
    pub per_question_cost: Vec<f64>,
    pub total_cost: f64,
    pub accepted_count: usize,
}

impl FitResult {
    fn build(
        mode: FitMode,
        model: Model,
        chosen_network: usize,
        chosen_assignments: Vec<usize>,
        labels: Vec<String>,
        per_question_cost: Vec<f64>,
    ) -> Self {
        let total_cost = per_question_cost.iter().sum();
        let accepted_count = per_question_cost
            .iter()
            .filter(|&&c| c < ACCEPTANCE_THRESHOLD)
            .count();
        FitResult {
            mode,
            model,
            chosen_network,
            chosen_assignments,
            labels,
            per_question_cost,
            total_cost,
            accepted_count,
        }
    }

    /// Assignment used for question `q`.
    pub fn assignment_for(&self, q: usize) -> usize {
        match self.mode {
            FitMode::Free => self.chosen_assignments[q],
            FitMode::Constrained => self.chosen_assignments[0],
        }
    }
}

/// Candidate sets prepared for one model: baselines need row-stochastic
/// graphs and susceptibilities instead of signed graphs and traits.
struct Evaluator<'a> {
    candidates: &'a CandidateSets,
    config: &'a FitConfig,
    stochastic: Vec<StochasticDigraph>,
    susceptibility: Vec<SusceptibilityVector>,
}

impl<'a> Evaluator<'a> {
    fn new(candidates: &'a CandidateSets, config: &'a FitConfig) -> Result<Self> {
        candidates.validate()?;
        config.params.validate()?;
        let (stochastic, susceptibility) = match config.model {
            Model::Cb | Model::Null => (Vec::new(), Vec::new()),
            Model::Fg => (
                candidates
                    .networks
                    .iter()
                    .map(to_row_stochastic)
                    .collect::<Result<_>>()?,
                Vec::new(),
            ),
            Model::Fj => (
                candidates
                    .networks
                    .iter()
                    .map(to_row_stochastic)
                    .collect::<Result<_>>()?,
                candidates
                    .assignments
                    .iter()
                    .map(traits_to_susceptibility)
                    .collect(),
            ),
        };
        Ok(Evaluator {
            candidates,
            config,
            stochastic,
            susceptibility,
        })
    }

    /// Candidates that can change the prediction. FG ignores assignments and
    /// Null ignores both, so only index 0 is searched; with lowest-index tie
    /// breaking this equals the exhaustive answer.
    fn effective_counts(&self) -> (usize, usize) {
        let (nets, asg) = (
            self.candidates.networks.len(),
            self.candidates.assignments.len(),
        );
        match self.config.model {
            Model::Cb | Model::Fj => (nets, asg),
            Model::Fg => (nets, 1),
            Model::Null => (1, 1),
        }
    }

    fn predict(
        &self,
        network: usize,
        assignment: usize,
        x: &OpinionVector,
    ) -> Result<OpinionVector> {
        let steps = self.config.steps;
        match self.config.model {
            Model::Cb => evolve(
                x,
                &self.candidates.networks[network],
                &self.candidates.assignments[assignment],
                &self.config.params,
                steps,
            ),
            Model::Fj => fj_evolve(
                x,
                &self.stochastic[network],
                &self.susceptibility[assignment],
                steps,
            ),
            Model::Fg => fg_evolve(x, &self.stochastic[network], steps),
            Model::Null => Ok(x.clone()),
        }
    }

    fn question_cost(&self, network: usize, assignment: usize, q: &Question) -> Result<f64> {
        let predicted = self.predict(network, assignment, &q.initial)?;
        cost_with(&q.last, &predicted, self.config.quantization)
    }
}

fn check_population(data: &QuestionDataset, candidates: &CandidateSets) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty("question dataset"));
    }
    candidates.validate()?;
    let n = candidates.population();
    match data.population() {
        Some(m) if m != n => Err(Error::Dimension {
            expected: n,
            got: m,
        }),
        _ => Ok(()),
    }
}

fn run_in_pool<T, F>(workers: Option<usize>, job: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> Result<T> + Send,
{
    match workers {
        None => job(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?
            .install(job),
    }
}

/// Lowest cost, earliest index on ties.
fn argmin(costs: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in costs.into_iter().enumerate() {
        if c < best.1 {
            best = (i, c);
        }
    }
    best
}

/// One network for all questions, one assignment per question.
pub fn fit_free(
    data: &QuestionDataset,
    candidates: &CandidateSets,
    config: &FitConfig,
) -> Result<FitResult> {
    check_population(data, candidates)?;
    let eval = Evaluator::new(candidates, config)?;
    let (nets, asg) = eval.effective_counts();
    let qs = data.questions();

    // best (assignment, cost) per (network, question), network-major
    let per_pair: Vec<(usize, f64)> = run_in_pool(config.workers, || {
        (0..nets * qs.len())
            .into_par_iter()
            .map(|idx| {
                let (net, q) = (idx / qs.len(), idx % qs.len());
                let costs = (0..asg)
                    .map(|a| eval.question_cost(net, a, &qs[q]))
                    .collect::<Result<Vec<_>>>()?;
                Ok(argmin(costs))
            })
            .collect()
    })?;

    let totals = per_pair
        .chunks(qs.len())
        .map(|rows| rows.iter().map(|&(_, c)| c).sum::<f64>());
    let (net, _) = argmin(totals);
    let rows = &per_pair[net * qs.len()..(net + 1) * qs.len()];
    Ok(FitResult::build(
        FitMode::Free,
        config.model,
        net,
        rows.iter().map(|&(a, _)| a).collect(),
        data.labels(),
        rows.iter().map(|&(_, c)| c).collect(),
    ))
}

/// One network and one assignment shared by all questions.
pub fn fit_constrained(
    data: &QuestionDataset,
    candidates: &CandidateSets,
    config: &FitConfig,
) -> Result<FitResult> {
    check_population(data, candidates)?;
    let eval = Evaluator::new(candidates, config)?;
    let (nets, asg) = eval.effective_counts();
    let qs = data.questions();

    // per-question costs for every (network, assignment), network-major
    let grid: Vec<Vec<f64>> = run_in_pool(config.workers, || {
        (0..nets * asg)
            .into_par_iter()
            .map(|idx| {
                let (net, a) = (idx / asg, idx % asg);
                qs.iter().map(|q| eval.question_cost(net, a, q)).collect()
            })
            .collect()
    })?;

    let (best, _) = argmin(grid.iter().map(|costs| costs.iter().sum::<f64>()));
    Ok(FitResult::build(
        FitMode::Constrained,
        config.model,
        best / asg,
        vec![best % asg],
        data.labels(),
        grid[best].clone(),
    ))
}

pub fn fit(
    mode: FitMode,
    data: &QuestionDataset,
    candidates: &CandidateSets,
    config: &FitConfig,
) -> Result<FitResult> {
    match mode {
        FitMode::Free => fit_free(data, candidates, config),
        FitMode::Constrained => fit_constrained(data, candidates, config),
    }
}

/// Costs of each question under a fixed (network, assignment) choice.
pub fn evaluate(
    data: &QuestionDataset,
    candidates: &CandidateSets,
    config: &FitConfig,
    network: usize,
    assignment: usize,
) -> Result<Vec<f64>> {
    check_population(data, candidates)?;
    if network >= candidates.networks.len() {
        return Err(Error::Index {
            index: network,
            size: candidates.networks.len(),
        });
    }
    if assignment >= candidates.assignments.len() {
        return Err(Error::Index {
            index: assignment,
            size: candidates.assignments.len(),
        });
    }
    let eval = Evaluator::new(candidates, config)?;
    data.questions()
        .iter()
        .map(|q| eval.question_cost(network, assignment, q))
        .collect()
}

// ---------------------------------------------------------------------------
// Cross-validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_questions: Vec<usize>,
    pub chosen_network: usize,
    pub chosen_assignment: usize,
    pub train_cost: f64,
    pub test_costs: Vec<f64>,
    pub mean_test_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldReport>,
    pub grand_mean: f64,
}

impl CrossValidation {
    /// `fold,mean_test_cost` rows `CV1..CVk` followed by a `Mean` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fold,mean_test_cost\n");
        for f in &self.folds {
            let _ = writeln!(s, "CV{},{}", f.fold, f.mean_test_cost);
        }
        let _ = writeln!(s, "Mean,{}", self.grand_mean);
        s
    }
}

/// Contiguous test blocks: fold `f` (0-based) tests questions
/// `f * Q / folds .. (f + 1) * Q / folds`.
pub fn fold_blocks(questions: usize, folds: usize) -> Result<Vec<Vec<usize>>> {
    if folds == 0 || !questions.is_multiple_of(folds) || folds > questions {
        return Err(Error::Partition { folds, questions });
    }
    let size = questions / folds;
    Ok((0..folds)
        .map(|f| (f * size..(f + 1) * size).collect())
        .collect())
}

/// Fits the constrained problem on all blocks but one and scores the
/// held-out block, for every block in turn.
pub fn crossval(
    data: &QuestionDataset,
    candidates: &CandidateSets,
    config: &FitConfig,
    folds: usize,
) -> Result<CrossValidation> {
    let blocks = fold_blocks(data.len(), folds)?;
    let mut reports = Vec::with_capacity(folds);
    for (f, test) in blocks.iter().enumerate() {
        let train: Vec<usize> = (0..data.len()).filter(|i| !test.contains(i)).collect();
        let (network, assignment, train_cost) = if train.is_empty() {
            // a single fold leaves nothing to train on
            (0, 0, 0.0)
        } else {
            let fitted = fit_constrained(&data.subset(&train), candidates, config)?;
            (
                fitted.chosen_network,
                fitted.chosen_assignments[0],
                fitted.total_cost,
            )
        };
        let test_costs = evaluate(&data.subset(test), candidates, config, network, assignment)?;
        let mean_test_cost = test_costs.iter().sum::<f64>() / test_costs.len() as f64;
        reports.push(FoldReport {
            fold: f + 1,
            test_questions: test.clone(),
            chosen_network: network,
            chosen_assignment: assignment,
            train_cost,
            test_costs,
            mean_test_cost,
        });
    }
    let grand_mean = reports.iter().map(|r| r.mean_test_cost).sum::<f64>() / folds as f64;
    Ok(CrossValidation {
        folds: reports,
        grand_mean,
    })
}

// ---------------------------------------------------------------------------
// Reporting

/// Questions by runs (e.g. countries) cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub questions: Vec<String>,
    pub columns: Vec<String>,
    /// `costs[q][c]`.
    pub costs: Vec<Vec<f64>>,
}

pub fn is_accepted(cost: f64) -> bool {
    cost < ACCEPTANCE_THRESHOLD
}

impl CostMatrix {
    pub fn new(questions: Vec<String>, columns: Vec<String>, costs: Vec<Vec<f64>>) -> Result<Self> {
        if costs.len() != questions.len() {
            return Err(Error::Dimension {
                expected: questions.len(),
                got: costs.len(),
            });
        }
        for row in &costs {
            if row.len() != columns.len() {
                return Err(Error::Dimension {
                    expected: columns.len(),
                    got: row.len(),
                });
            }
        }
        Ok(CostMatrix {
            questions,
            columns,
            costs,
        })
    }

    /// Single-column table for one run.
    pub fn from_fit(result: &FitResult, column: &str) -> Self {
        CostMatrix {
            questions: result.labels.clone(),
            columns: vec![column.to_string()],
            costs: result.per_question_cost.iter().map(|&c| vec![c]).collect(),
        }
    }

    pub fn accepted(&self) -> Vec<Vec<bool>> {
        self.costs
            .iter()
            .map(|row| row.iter().map(|&c| is_accepted(c)).collect())
            .collect()
    }

    pub fn accepted_per_column(&self) -> Vec<usize> {
        (0..self.columns.len())
            .map(|c| self.costs.iter().filter(|row| is_accepted(row[c])).count())
            .collect()
    }

    fn column_totals(&self) -> Vec<f64> {
        (0..self.columns.len())
            .map(|c| self.costs.iter().map(|row| row[c]).sum())
            .collect()
    }

    /// Question rows followed by `average`, `total` and `accepted` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("question");
        for c in &self.columns {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (label, row) in self.questions.iter().zip(&self.costs) {
            s.push_str(label);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        let totals = self.column_totals();
        let rows = self.questions.len().max(1) as f64;
        s.push_str("average");
        for t in &totals {
            let _ = write!(s, ",{}", t / rows);
        }
        s.push_str("\ntotal");
        for t in &totals {
            let _ = write!(s, ",{t}");
        }
        s.push_str("\naccepted");
        for a in self.accepted_per_column() {
            let _ = write!(s, ",{a}");
        }
        s.push('\n');
        s
    }

    /// Same layout with each cell marked `green` (accepted) or `red`.
    pub fn to_status_csv(&self) -> String {
        let mut s = String::from("question");
        for c in &self.columns {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (label, row) in self.questions.iter().zip(self.accepted()) {
            s.push_str(label);
            for ok in row {
                s.push_str(if ok { ",green" } else { ",red" });
            }
            s.push('\n');
        }
        s
    }
}
