//! Classification-based (CB) opinion dynamics on signed digraphs.
//!
//! Agents sort their in-neighbours into five perceived-agreement buckets and
//! move their opinion according to a convex mix of conformist, radical and
//! stubborn behaviour. The crate also ships the Friedkin-Johnsen,
//! French-DeGroot and Null comparison models, signed small-world generators
//! with structural metrics, and an exhaustive grid-search harness that fits
//! networks and trait assignments to observed opinion distributions.

pub mod analysis;
pub mod baselines;
pub mod dynamics;
mod error;
pub mod expm;
pub mod fitting;
pub mod graph;
pub mod io;

pub use error::{Error, Result};

pub use analysis::{GeneralAgreement, OpinionCategory, TransitionTable};
pub use baselines::{StochasticDigraph, SusceptibilityVector};
pub use dynamics::{
    EvolutionParams, InnerTraits, NeighbourPartition, OpinionVector, TraitAssignment,
};
pub use fitting::{CandidateSets, FitMode, FitResult, Model, QuestionDataset};
pub use graph::{NetworkMetrics, SignedDigraph};
