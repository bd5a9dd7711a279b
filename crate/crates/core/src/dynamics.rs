//! The classification-based opinion update law.
//!
//! Each agent compares its opinion with the sign-weighted opinion of every
//! in-neighbour, `delta = x_i - w_ij * x_j`, and sorts the neighbour into one
//! of five perception buckets over `[-2, 2]`:
//!
//! | bucket       | interval              |
//! |--------------|-----------------------|
//! | much less    | `6/5 <= delta <= 2`   |
//! | less         | `2/5 <= delta < 6/5`  |
//! | comparable   | `-2/5 < delta < 2/5`  |
//! | more         | `-6/5 < delta <= -2/5`|
//! | much more    | `-2 <= delta <= -6/5` |
//!
//! Comparisons are exact `f64` comparisons against the bounds, so the
//! trajectories are reproducible bit for bit. The self-loop always lands in
//! the comparable bucket.

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::SignedDigraph;
use crate::{Error, Result};

const NEAR: f64 = 2.0 / 5.0;
const FAR: f64 = 6.0 / 5.0;
const TRAIT_SUM_TOLERANCE: f64 = 1e-9;

/// Agent opinions, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OpinionVector(Vec<f64>);

impl OpinionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Range {
                    value: v,
                    lo: -1.0,
                    hi: 1.0,
                });
            }
        }
        Ok(OpinionVector(values))
    }

    /// Independent uniform draws on `[-1, 1]`.
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        OpinionVector((0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Caller guarantees every value is already in `[-1, 1]`.
    pub(crate) fn from_bounded(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (-1.0..=1.0).contains(v)));
        OpinionVector(values)
    }
}

impl Deref for OpinionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for OpinionVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for OpinionVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<OpinionVector> for Vec<f64> {
    fn from(x: OpinionVector) -> Self {
        x.0
    }
}

/// Conformism, radicalism and stubbornness of one agent; a point on the
/// probability simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTraits", into = "RawTraits")]
pub struct InnerTraits {
    conformism: f64,
    radicalism: f64,
    stubbornness: f64,
}

#[derive(Serialize, Deserialize)]
struct RawTraits {
    conformism: f64,
    radicalism: f64,
    stubbornness: f64,
}

impl TryFrom<RawTraits> for InnerTraits {
    type Error = Error;

    fn try_from(r: RawTraits) -> Result<Self> {
        InnerTraits::new(r.conformism, r.radicalism, r.stubbornness)
    }
}

impl From<InnerTraits> for RawTraits {
    fn from(t: InnerTraits) -> Self {
        RawTraits {
            conformism: t.conformism,
            radicalism: t.radicalism,
            stubbornness: t.stubbornness,
        }
    }
}

impl InnerTraits {
    pub const CONFORMIST: InnerTraits = InnerTraits {
        conformism: 1.0,
        radicalism: 0.0,
        stubbornness: 0.0,
    };
    pub const RADICAL: InnerTraits = InnerTraits {
        conformism: 0.0,
        radicalism: 1.0,
        stubbornness: 0.0,
    };
    pub const STUBBORN: InnerTraits = InnerTraits {
        conformism: 0.0,
        radicalism: 0.0,
        stubbornness: 1.0,
    };

    pub fn new(conformism: f64, radicalism: f64, stubbornness: f64) -> Result<Self> {
        for v in [conformism, radicalism, stubbornness] {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Range {
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        let sum = conformism + radicalism + stubbornness;
        if (sum - 1.0).abs() > TRAIT_SUM_TOLERANCE {
            return Err(Error::Parameter(format!(
                "inner traits sum to {sum}, not 1"
            )));
        }
        Ok(InnerTraits {
            conformism,
            radicalism,
            stubbornness,
        })
    }

    /// Uniform draw on the simplex from two sorted uniforms.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        InnerTraits {
            conformism: a,
            radicalism: b - a,
            stubbornness: 1.0 - b,
        }
    }

    /// `(a, b, c) -> (c, a, b)`: the conformism weight becomes the radicalism
    /// weight and so on.
    pub fn rotated(&self) -> Self {
        InnerTraits {
            conformism: self.stubbornness,
            radicalism: self.conformism,
            stubbornness: self.radicalism,
        }
    }

    pub fn conformism(&self) -> f64 {
        self.conformism
    }

    pub fn radicalism(&self) -> f64 {
        self.radicalism
    }

    pub fn stubbornness(&self) -> f64 {
        self.stubbornness
    }
}

/// Inner traits of every agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraitAssignment(Vec<InnerTraits>);

impl TraitAssignment {
    pub fn new(per_agent: Vec<InnerTraits>) -> Self {
        TraitAssignment(per_agent)
    }

    pub fn uniform(n: usize, traits: InnerTraits) -> Self {
        TraitAssignment(vec![traits; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        TraitAssignment((0..n).map(|_| InnerTraits::random(rng)).collect())
    }

    pub fn rotated(&self) -> Self {
        TraitAssignment(self.0.iter().map(InnerTraits::rotated).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> InnerTraits {
        self.0[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &InnerTraits> {
        self.0.iter()
    }
}

/// Global evolution parameters: step magnitude, distant-opinion weight and
/// radical self-reinforcement weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub lambda: f64,
    pub xi: f64,
    pub mu: f64,
}

impl Default for EvolutionParams {
    fn default() -> Self {
        EvolutionParams {
            lambda: 0.4,
            xi: 2.0,
            mu: 5.0,
        }
    }
}

impl EvolutionParams {
    pub fn new(lambda: f64, xi: f64, mu: f64) -> Result<Self> {
        let p = EvolutionParams { lambda, xi, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("xi", self.xi), ("mu", self.mu)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parameter(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// How agent `i` perceives a neighbour's opinion relative to its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Perception {
    MuchLess,
    Less,
    Comparable,
    More,
    MuchMore,
}

impl Perception {
    /// Buckets the weighted difference `x_i - w_ij * x_j`.
    pub fn of_difference(delta: f64) -> Self {
        debug_assert!(
            (-2.0..=2.0).contains(&delta),
            "delta {delta} outside [-2, 2]"
        );
        if delta >= FAR {
            Perception::MuchLess
        } else if delta >= NEAR {
            Perception::Less
        } else if delta > -NEAR {
            Perception::Comparable
        } else if delta > -FAR {
            Perception::More
        } else {
            Perception::MuchMore
        }
    }
}

/// Bucket sizes of one agent's neighbourhood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighbourPartition {
    pub much_less: usize,
    pub less: usize,
    pub comparable: usize,
    pub more: usize,
    pub much_more: usize,
}

impl NeighbourPartition {
    pub fn total(&self) -> usize {
        self.much_less + self.less + self.comparable + self.more + self.much_more
    }

    fn add(&mut self, p: Perception) {
        match p {
            Perception::MuchLess => self.much_less += 1,
            Perception::Less => self.less += 1,
            Perception::Comparable => self.comparable += 1,
            Perception::More => self.more += 1,
            Perception::MuchMore => self.much_more += 1,
        }
    }
}

fn check_dims(opinions: usize, graph: usize) -> Result<()> {
    if opinions != graph {
        return Err(Error::Dimension {
            expected: graph,
            got: opinions,
        });
    }
    Ok(())
}

fn partition_unchecked(agent: usize, x: &[f64], graph: &SignedDigraph) -> NeighbourPartition {
    let xi = x[agent];
    let mut part = NeighbourPartition::default();
    for &(j, w) in graph.in_neighbours(agent) {
        part.add(Perception::of_difference(xi - f64::from(w) * x[j]));
    }
    part
}

pub fn classify_neighbours(
    agent: usize,
    opinions: &OpinionVector,
    graph: &SignedDigraph,
) -> Result<NeighbourPartition> {
    check_dims(opinions.len(), graph.size())?;
    if agent >= graph.size() {
        return Err(Error::Index {
            index: agent,
            size: graph.size(),
        });
    }
    Ok(partition_unchecked(agent, opinions, graph))
}

/// Identity on `[-1, 1]`, sign outside.
pub fn saturate(value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NonFinite(value));
    }
    Ok(clamp_unit(value))
}

fn clamp_unit(value: f64) -> f64 {
    if value.abs() <= 1.0 {
        value
    } else {
        value.signum()
    }
}

fn check_inputs(
    opinions: &OpinionVector,
    graph: &SignedDigraph,
    traits: &TraitAssignment,
    params: &EvolutionParams,
) -> Result<()> {
    check_dims(opinions.len(), graph.size())?;
    check_dims(traits.len(), graph.size())?;
    params.validate()
}

fn step_unchecked(
    x: &[f64],
    graph: &SignedDigraph,
    traits: &TraitAssignment,
    params: &EvolutionParams,
) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let p = partition_unchecked(i, x, graph);
            let t = traits.get(i);
            let count = |c: usize| c as f64;
            let conformist = t.conformism * params.xi * (count(p.much_more) - count(p.much_less))
                + t.conformism * (count(p.more) - count(p.less));
            let radical = t.radicalism * params.mu * count(p.comparable) * x[i];
            clamp_unit(x[i] + params.lambda / count(p.total()) * (conformist + radical))
        })
        .collect()
}

/// One synchronous update of every agent from the same snapshot.
pub fn step(
    opinions: &OpinionVector,
    graph: &SignedDigraph,
    traits: &TraitAssignment,
    params: &EvolutionParams,
) -> Result<OpinionVector> {
    check_inputs(opinions, graph, traits, params)?;
    Ok(OpinionVector::from_bounded(step_unchecked(
        opinions, graph, traits, params,
    )))
}

/// State after `steps` updates.
pub fn evolve(
    initial: &OpinionVector,
    graph: &SignedDigraph,
    traits: &TraitAssignment,
    params: &EvolutionParams,
    steps: usize,
) -> Result<OpinionVector> {
    check_inputs(initial, graph, traits, params)?;
    let mut x = initial.as_slice().to_vec();
    for _ in 0..steps {
        x = step_unchecked(&x, graph, traits, params);
    }
    Ok(OpinionVector::from_bounded(x))
}

/// All `steps + 1` states, starting with `initial`.
pub fn evolve_trajectory(
    initial: &OpinionVector,
    graph: &SignedDigraph,
    traits: &TraitAssignment,
    params: &EvolutionParams,
    steps: usize,
) -> Result<Vec<OpinionVector>> {
    check_inputs(initial, graph, traits, params)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    for _ in 0..steps {
        let next = step_unchecked(&states[states.len() - 1], graph, traits, params);
        states.push(OpinionVector::from_bounded(next));
    }
    Ok(states)
}

/// Componentwise mean of an assignment.
pub fn average_traits(traits: &TraitAssignment) -> Result<InnerTraits> {
    if traits.is_empty() {
        return Err(Error::Empty("trait assignment"));
    }
    let n = traits.len() as f64;
    let (a, b, c) = traits.iter().fold((0.0, 0.0, 0.0), |(a, b, c), t| {
        (a + t.conformism, b + t.radicalism, c + t.stubbornness)
    });
    Ok(InnerTraits {
        conformism: a / n,
        radicalism: b / n,
        stubbornness: c / n,
    })
}
