//! Comparison models: Friedkin-Johnsen, French-DeGroot and Null.

use serde::{Deserialize, Serialize};

use crate::dynamics::{OpinionVector, TraitAssignment};
use crate::graph::SignedDigraph;
use crate::{Error, Result};

/// Unsigned row-stochastic influence matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticDigraph {
    n: usize,
    /// Nonzero entries per row as `(column, weight)`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl StochasticDigraph {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c == j)
            .map_or(0.0, |&(_, w)| w)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|&(_, w)| w).sum()
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, w)| w * x[j]).sum()
    }
}

/// Per-agent susceptibility to interpersonal influence, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SusceptibilityVector(Vec<f64>);

impl SusceptibilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Range {
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(SusceptibilityVector(values))
    }

    pub fn constant(n: usize, a: f64) -> Result<Self> {
        Self::new(vec![a; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Drops signs and spreads each row uniformly over its nonzero entries.
pub fn to_row_stochastic(graph: &SignedDigraph) -> Result<StochasticDigraph> {
    let rows = (0..graph.size())
        .map(|i| {
            let nbrs = graph.in_neighbours(i);
            if nbrs.is_empty() {
                return Err(Error::ZeroRow(i));
            }
            let w = 1.0 / nbrs.len() as f64;
            Ok(nbrs.iter().map(|&(j, _)| (j, w)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(StochasticDigraph {
        n: graph.size(),
        rows,
    })
}

/// `a_i = alpha_i / (alpha_i + gamma_i)`, or 0.5 for purely radical agents.
pub fn traits_to_susceptibility(traits: &TraitAssignment) -> SusceptibilityVector {
    SusceptibilityVector(
        traits
            .iter()
            .map(|t| {
                let denom = t.conformism() + t.stubbornness();
                if denom == 0.0 {
                    0.5
                } else {
                    t.conformism() / denom
                }
            })
            .collect(),
    )
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

/// `x[k+1]_i = a_i * (P x[k])_i + (1 - a_i) * x[0]_i`.
pub fn fj_evolve(
    initial: &OpinionVector,
    graph: &StochasticDigraph,
    susceptibility: &SusceptibilityVector,
    steps: usize,
) -> Result<OpinionVector> {
    Ok(fj_trajectory(initial, graph, susceptibility, steps)?
        .pop()
        .expect("trajectory holds the initial state"))
}

pub fn fj_trajectory(
    initial: &OpinionVector,
    graph: &StochasticDigraph,
    susceptibility: &SusceptibilityVector,
    steps: usize,
) -> Result<Vec<OpinionVector>> {
    check_dims(graph.size(), initial.len())?;
    check_dims(graph.size(), susceptibility.0.len())?;
    let x0 = initial.as_slice();
    let a = susceptibility.as_slice();
    let mut states = vec![initial.clone()];
    for _ in 0..steps {
        let x = states[states.len() - 1].as_slice();
        let next = (0..graph.size())
            .map(|i| (a[i] * graph.row_dot(i, x) + (1.0 - a[i]) * x0[i]).clamp(-1.0, 1.0))
            .collect();
        states.push(OpinionVector::from_bounded(next));
    }
    Ok(states)
}

/// `x[k+1] = P x[k]`.
pub fn fg_evolve(
    initial: &OpinionVector,
    graph: &StochasticDigraph,
    steps: usize,
) -> Result<OpinionVector> {
    Ok(fg_trajectory(initial, graph, steps)?
        .pop()
        .expect("trajectory holds the initial state"))
}

pub fn fg_trajectory(
    initial: &OpinionVector,
    graph: &StochasticDigraph,
    steps: usize,
) -> Result<Vec<OpinionVector>> {
    check_dims(graph.size(), initial.len())?;
    let mut states = vec![initial.clone()];
    for _ in 0..steps {
        let x = states[states.len() - 1].as_slice();
        let next = (0..graph.size())
            .map(|i| graph.row_dot(i, x).clamp(-1.0, 1.0))
            .collect();
        states.push(OpinionVector::from_bounded(next));
    }
    Ok(states)
}

/// Opinions never change.
pub fn null_evolve(initial: &OpinionVector, _steps: usize) -> OpinionVector {
    initial.clone()
}
