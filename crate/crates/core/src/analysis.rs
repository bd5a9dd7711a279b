//! General agreement, qualitative opinion-distribution categories, and
//! transition tables between them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sums of the negative and of the positive opinions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralAgreement {
    pub theta_minus: f64,
    pub theta_plus: f64,
}

pub fn general_agreement(x: &[f64]) -> GeneralAgreement {
    let mut theta_minus = 0.0;
    let mut theta_plus = 0.0;
    for &v in x {
        if v < 0.0 {
            theta_minus += v;
        } else if v > 0.0 {
            theta_plus += v;
        }
    }
    GeneralAgreement {
        theta_minus,
        theta_plus,
    }
}

pub fn agreement_trajectory<T: AsRef<[f64]>>(trajectory: &[T]) -> Vec<GeneralAgreement> {
    trajectory
        .iter()
        .map(|x| general_agreement(x.as_ref()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpinionCategory {
    PerfectConsensus,
    Consensus,
    Polarization,
    Clustering,
    Dissensus,
}

impl OpinionCategory {
    pub const ALL: [OpinionCategory; 5] = [
        OpinionCategory::PerfectConsensus,
        OpinionCategory::Consensus,
        OpinionCategory::Polarization,
        OpinionCategory::Clustering,
        OpinionCategory::Dissensus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            OpinionCategory::PerfectConsensus => "PerfectConsensus",
            OpinionCategory::Consensus => "Consensus",
            OpinionCategory::Polarization => "Polarization",
            OpinionCategory::Clustering => "Clustering",
            OpinionCategory::Dissensus => "Dissensus",
        }
    }
}

impl fmt::Display for OpinionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const HISTOGRAM_BINS: usize = 10;

/// Upper edges of the ten bins over `[-1, 1]`.
const BIN_UPPER: [f64; HISTOGRAM_BINS] = [-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Counts per bin; bins are right-closed except the first, which also holds -1.
pub fn histogram(x: &[f64]) -> [usize; HISTOGRAM_BINS] {
    let mut counts = [0; HISTOGRAM_BINS];
    for &v in x {
        let bin = BIN_UPPER
            .iter()
            .position(|&upper| v <= upper)
            .unwrap_or(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    counts
}

/// Thresholds of the category rule cascade. Fractions are of the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryThresholds {
    pub perfect_consensus_range: f64,
    pub polarization_extreme_mass: f64,
    pub polarization_each_extreme: f64,
    pub polarization_interior_max: f64,
    pub consensus_window_mass: f64,
    pub cluster_mode_mass: f64,
    pub cluster_gap_max: f64,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        CategoryThresholds {
            perfect_consensus_range: 0.2,
            polarization_extreme_mass: 0.7,
            polarization_each_extreme: 0.2,
            polarization_interior_max: 0.3,
            consensus_window_mass: 0.7,
            cluster_mode_mass: 0.15,
            cluster_gap_max: 0.05,
        }
    }
}

pub fn categorize(x: &[f64]) -> Result<OpinionCategory> {
    categorize_with(x, &CategoryThresholds::default())
}

/// First matching rule wins: perfect consensus, polarization, consensus,
/// clustering, else dissensus.
pub fn categorize_with(x: &[f64], t: &CategoryThresholds) -> Result<OpinionCategory> {
    if x.len() < 2 {
        return Err(Error::Parameter(format!(
            "categorization needs at least 2 opinions, got {}",
            x.len()
        )));
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= t.perfect_consensus_range {
        return Ok(OpinionCategory::PerfectConsensus);
    }

    let n = x.len() as f64;
    let mass: Vec<f64> = histogram(x).iter().map(|&c| c as f64 / n).collect();
    let last = HISTOGRAM_BINS - 1;

    let (low, high) = (mass[0], mass[last]);
    let interior: f64 = mass[1..last].iter().sum();
    if low + high >= t.polarization_extreme_mass
        && low >= t.polarization_each_extreme
        && high >= t.polarization_each_extreme
        && interior <= t.polarization_interior_max
    {
        return Ok(OpinionCategory::Polarization);
    }

    let window = |k: usize| -> f64 { mass[k.saturating_sub(1)..=(k + 1).min(last)].iter().sum() };
    if (0..HISTOGRAM_BINS).any(|k| window(k) >= t.consensus_window_mass) {
        return Ok(OpinionCategory::Consensus);
    }

    let separated = (0..HISTOGRAM_BINS).any(|a| {
        mass[a] >= t.cluster_mode_mass
            && (a + 2..HISTOGRAM_BINS).any(|b| {
                mass[b] >= t.cluster_mode_mass
                    && mass[a + 1..b].iter().any(|&m| m < t.cluster_gap_max)
            })
    });
    if separated {
        return Ok(OpinionCategory::Clustering);
    }
    Ok(OpinionCategory::Dissensus)
}

/// Counts of (initial category, final category) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub counts: [[usize; 5]; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellShare {
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSummary {
    pub above: CellShare,
    pub on: CellShare,
    pub below: CellShare,
}

impl TransitionTable {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn record(&mut self, from: OpinionCategory, to: OpinionCategory) {
        self.counts[from.index()][to.index()] += 1;
    }

    /// Header plus five labelled rows; rows are initial, columns final.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("initial\\final");
        for c in OpinionCategory::ALL {
            s.push(',');
            s.push_str(c.name());
        }
        s.push('\n');
        for from in OpinionCategory::ALL {
            s.push_str(from.name());
            for to in OpinionCategory::ALL {
                s.push(',');
                s.push_str(&self.counts[from.index()][to.index()].to_string());
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let expected_header = TransitionTable::default().to_csv();
        if Some(header) != expected_header.lines().next() {
            return Err(Error::Schema(format!(
                "unexpected transition table header '{header}'"
            )));
        }
        let mut table = TransitionTable::default();
        for from in OpinionCategory::ALL {
            let line = lines
                .next()
                .ok_or_else(|| Error::Schema("transition table is missing rows".into()))?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 || fields[0] != from.name() {
                return Err(Error::Schema(format!("bad transition table row '{line}'")));
            }
            for (to, f) in fields[1..].iter().enumerate() {
                table.counts[from.index()][to] = f
                    .parse()
                    .map_err(|_| Error::Schema(format!("bad count '{f}'")))?;
            }
        }
        Ok(table)
    }
}

pub fn transition_table<A, B>(pairs: &[(A, B)]) -> Result<TransitionTable>
where
    A: AsRef<[f64]>,
    B: AsRef<[f64]>,
{
    let mut table = TransitionTable::default();
    for (initial, last) in pairs {
        table.record(categorize(initial.as_ref())?, categorize(last.as_ref())?);
    }
    Ok(table)
}

pub fn diagonal_summary(table: &TransitionTable) -> DiagonalSummary {
    let (mut above, mut on, mut below) = (0, 0, 0);
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            match j.cmp(&i) {
                std::cmp::Ordering::Greater => above += c,
                std::cmp::Ordering::Equal => on += c,
                std::cmp::Ordering::Less => below += c,
            }
        }
    }
    let total = table.total();
    let share = |count: usize| CellShare {
        count,
        percent: if total == 0 {
            0.0
        } else {
            100.0 * count as f64 / total as f64
        },
    };
    DiagonalSummary {
        above: share(above),
        on: share(on),
        below: share(below),
    }
}
