//! Survey ingestion, population resampling, and artifact export.
//!
//! Survey CSVs carry one respondent per row under a header of question ids;
//! answers are Likert-10 integers, missing answers are `NA` or empty. All
//! exports are UTF-8 with LF line endings and use the shortest decimal form
//! that round-trips an `f64`.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{GeneralAgreement, TransitionTable};
use crate::dynamics::{InnerTraits, OpinionVector, TraitAssignment};
use crate::fitting::{CostMatrix, FitResult, Question, QuestionDataset};
use crate::graph::NetworkMetrics;
use crate::{Error, Result};

pub const TRAJECTORY_STEP_COLUMN: &str = "step";
pub const AGREEMENT_HEADER: &str = "step,theta_minus,theta_plus";
pub const TRAITS_HEADER: &str = "conformism,radicalism,stubbornness";
pub const OPINIONS_HEADER: &str = "opinion";

/// Likert answer `1..=10` to its bin midpoint `(2v - 11) / 10`.
pub fn rescale_likert(answer: u8) -> Result<f64> {
    if !(1..=10).contains(&answer) {
        return Err(Error::Range {
            value: answer as f64,
            lo: 1.0,
            hi: 10.0,
        });
    }
    Ok((2 * answer as i32 - 11) as f64 / 10.0)
}

/// Respondent-by-question Likert answers of one survey wave.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyTable {
    pub wave: String,
    pub country: String,
    pub questions: Vec<String>,
    /// `answers[respondent][question]`, `None` when missing.
    pub answers: Vec<Vec<Option<u8>>>,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("NA")
}

impl SurveyTable {
    pub fn from_reader<R: std::io::Read>(reader: R, wave: &str, country: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let questions: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if questions.is_empty() {
            return Err(Error::Schema("survey has no question columns".into()));
        }
        let mut answers = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parsed = record
                .iter()
                .map(|field| {
                    if is_missing(field) {
                        return Ok(None);
                    }
                    match field.parse::<u8>() {
                        Ok(v) if (1..=10).contains(&v) => Ok(Some(v)),
                        _ => Err(Error::Schema(format!(
                            "respondent {}: answer '{field}' is not in 1..=10",
                            row + 1
                        ))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            answers.push(parsed);
        }
        Ok(SurveyTable {
            wave: wave.to_string(),
            country: country.to_string(),
            questions,
            answers,
        })
    }

    pub fn from_path(path: &Path, wave: &str, country: &str) -> Result<Self> {
        Self::from_reader(fs::File::open(path)?, wave, country)
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.questions.join(",");
        s.push('\n');
        for row in &self.answers {
            let cells: Vec<String> = row
                .iter()
                .map(|a| a.map_or_else(|| "NA".to_string(), |v| v.to_string()))
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn column(&self, question: &str) -> Result<usize> {
        self.questions
            .iter()
            .position(|q| q == question)
            .ok_or_else(|| Error::Schema(format!("unknown question column '{question}'")))
    }

    /// Rescaled present answers to one question.
    pub fn distribution(&self, question: &str) -> Result<QuestionDistribution> {
        let col = self.column(question)?;
        let values = self
            .answers
            .iter()
            .filter_map(|row| row[col])
            .map(rescale_likert)
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            log::warn!(
                "question '{question}' has no answers in wave '{}' ({})",
                self.wave,
                self.country
            );
        }
        Ok(QuestionDistribution {
            question: question.to_string(),
            respondents: values.len(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDistribution {
    pub question: String,
    pub respondents: usize,
    pub values: Vec<f64>,
}

/// Opinion distributions of the listed questions (all columns when empty).
pub fn load_survey(
    path: &Path,
    question_columns: &[&str],
    wave: &str,
) -> Result<Vec<QuestionDistribution>> {
    let table = SurveyTable::from_path(path, wave, "")?;
    let columns: Vec<String> = if question_columns.is_empty() {
        table.questions.clone()
    } else {
        question_columns.iter().map(|s| s.to_string()).collect()
    };
    columns.iter().map(|q| table.distribution(q)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resampling {
    /// Nearest-rank quantiles `(i - 0.5) / n` of the sorted values.
    #[default]
    Quantile,
    /// Seeded draws with replacement.
    Random { seed: u64 },
}

pub fn resample_population(
    values: &[f64],
    n: usize,
    strategy: Resampling,
) -> Result<OpinionVector> {
    if values.is_empty() {
        return Err(Error::Empty("values to resample"));
    }
    if n == 0 {
        return Err(Error::Parameter(
            "target population must be at least 1".into(),
        ));
    }
    let out = match strategy {
        Resampling::Quantile => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            let m = sorted.len();
            // rank ceil(q * m) with q = (2i - 1) / 2n, in integers
            (1..=n)
                .map(|i| {
                    let rank = ((2 * i - 1) * m).div_ceil(2 * n);
                    sorted[rank.clamp(1, m) - 1]
                })
                .collect()
        }
        Resampling::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| *values.choose(&mut rng).expect("nonempty"))
                .collect()
        }
    };
    OpinionVector::new(out)
}

/// Pairs the same questions across two waves into a fitting dataset,
/// resampling each distribution to `n` agents.
pub fn dataset_from_surveys(
    initial: &SurveyTable,
    last: &SurveyTable,
    questions: &[&str],
    n: usize,
    strategy: Resampling,
) -> Result<QuestionDataset> {
    let labels: Vec<&str> = if questions.is_empty() {
        initial.questions.iter().map(String::as_str).collect()
    } else {
        questions.to_vec()
    };
    let qs = labels
        .iter()
        .map(|&q| {
            let resample = |table: &SurveyTable| -> Result<OpinionVector> {
                let dist = table.distribution(q)?;
                resample_population(&dist.values, n, strategy).map_err(|e| match e {
                    Error::Empty(_) => Error::Schema(format!(
                        "question '{q}' has no answers in wave '{}'",
                        table.wave
                    )),
                    other => other,
                })
            };
            Ok(Question {
                label: q.to_string(),
                initial: resample(initial)?,
                last: resample(last)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QuestionDataset::new(qs)
}

// ---------------------------------------------------------------------------
// Export

/// Shortest round-trip decimal; negative zero is written as `0`.
pub fn fmt_real(v: f64) -> String {
    format!("{}", v + 0.0)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

pub fn trajectory_csv(states: &[OpinionVector]) -> String {
    let n = states.first().map_or(0, |s| s.len());
    let mut s = String::from(TRAJECTORY_STEP_COLUMN);
    for i in 0..n {
        s.push_str(&format!(",x{i}"));
    }
    s.push('\n');
    for (k, x) in states.iter().enumerate() {
        s.push_str(&k.to_string());
        for &v in x.iter() {
            s.push(',');
            s.push_str(&fmt_real(v));
        }
        s.push('\n');
    }
    s
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<OpinionVector>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.get(0) != Some(TRAJECTORY_STEP_COLUMN) {
        return Err(Error::Schema(
            "trajectory header must start with 'step'".into(),
        ));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let values = rec
                .iter()
                .skip(1)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Schema(format!("bad opinion '{f}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            OpinionVector::new(values)
        })
        .collect()
}

pub fn agreement_csv(curve: &[GeneralAgreement]) -> String {
    let mut s = format!("{AGREEMENT_HEADER}\n");
    for (k, g) in curve.iter().enumerate() {
        s.push_str(&format!(
            "{k},{},{}\n",
            fmt_real(g.theta_minus),
            fmt_real(g.theta_plus)
        ));
    }
    s
}

pub fn metrics_csv(m: &NetworkMetrics) -> String {
    format!(
        "average_path_length,clustering_coefficient,positive_edges,negative_edges,diameter,balance_index\n{},{},{},{},{},{}\n",
        fmt_real(m.average_path_length),
        fmt_real(m.clustering_coefficient),
        m.positive_edges,
        m.negative_edges,
        m.diameter,
        fmt_real(m.balance_index)
    )
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Artifact<'a> {
    Trajectory(&'a [OpinionVector]),
    Agreement(&'a [GeneralAgreement]),
    Transitions(&'a TransitionTable),
    Fit(&'a FitResult),
    Metrics(&'a NetworkMetrics),
}

pub fn render(artifact: Artifact<'_>, format: Format) -> Result<String> {
    match (artifact, format) {
        (Artifact::Trajectory(t), Format::Csv) => Ok(trajectory_csv(t)),
        (Artifact::Trajectory(t), Format::Json) => to_json(&t),
        (Artifact::Agreement(a), Format::Csv) => Ok(agreement_csv(a)),
        (Artifact::Agreement(a), Format::Json) => to_json(&a),
        (Artifact::Transitions(t), Format::Csv) => Ok(t.to_csv()),
        (Artifact::Transitions(t), Format::Json) => to_json(t),
        (Artifact::Fit(f), Format::Csv) => Ok(CostMatrix::from_fit(f, "cost").to_csv()),
        (Artifact::Fit(f), Format::Json) => to_json(f),
        (Artifact::Metrics(m), Format::Csv) => Ok(metrics_csv(m)),
        (Artifact::Metrics(m), Format::Json) => to_json(m),
    }
}

pub fn export(artifact: Artifact<'_>, path: &Path, format: Format) -> Result<()> {
    write_file(path, &render(artifact, format)?)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

// ---------------------------------------------------------------------------
// Simulation inputs

pub fn read_opinions(path: &Path) -> Result<OpinionVector> {
    let text = fs::read_to_string(path)?;
    if Format::from_path(path) == Format::Json {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>() != [OPINIONS_HEADER] {
        return Err(Error::Schema(format!(
            "opinion file needs a single '{OPINIONS_HEADER}' column"
        )));
    }
    let values = rdr
        .records()
        .map(|rec| {
            let rec = rec?;
            rec[0]
                .parse::<f64>()
                .map_err(|_| Error::Schema(format!("bad opinion '{}'", &rec[0])))
        })
        .collect::<Result<Vec<_>>>()?;
    OpinionVector::new(values).map_err(|e| Error::Schema(e.to_string()))
}

pub fn opinions_csv(x: &[f64]) -> String {
    let mut s = format!("{OPINIONS_HEADER}\n");
    for &v in x {
        s.push_str(&fmt_real(v));
        s.push('\n');
    }
    s
}

pub fn read_traits(path: &Path) -> Result<TraitAssignment> {
    let text = fs::read_to_string(path)?;
    if Format::from_path(path) == Format::Json {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>().join(",") != TRAITS_HEADER {
        return Err(Error::Schema(format!(
            "traits file needs header '{TRAITS_HEADER}'"
        )));
    }
    let traits = rdr
        .records()
        .map(|rec| {
            let rec = rec?;
            let v = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Schema(format!("bad trait value '{f}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            InnerTraits::new(v[0], v[1], v[2]).map_err(|e| Error::Schema(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraitAssignment::new(traits))
}

pub fn traits_csv(traits: &TraitAssignment) -> String {
    let mut s = format!("{TRAITS_HEADER}\n");
    for t in traits.iter() {
        s.push_str(&format!(
            "{},{},{}\n",
            fmt_real(t.conformism()),
            fmt_real(t.radicalism()),
            fmt_real(t.stubbornness())
        ));
    }
    s
}
