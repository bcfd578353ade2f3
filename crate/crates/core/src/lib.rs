//! Restoration planning for damaged interdependent infrastructure networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`network`] holds the multilayer network data model and its text format.
//! * [`flow`] prices a functionality state by solving one min-cost flow with
//!   surplus/deficit slacks per layer.
//! * [`solver`] builds time-phased restoration plans under a per-step resource
//!   cap, exactly (branch-and-bound) or with a rolling-horizon heuristic.
//! * [`scenario`] generates seeded damage scenarios and labelled datasets.
//! * [`surrogate`] is a small feedforward network trained with Adam to predict
//!   plans from damage vectors.
//! * [`analysis`] derives resource trade-off curves and weight-based
//!   interpretability views from trained surrogates.

pub mod analysis;
pub mod error;
pub mod flow;
pub mod network;
pub mod scenario;
pub mod seed;
pub mod solver;
pub mod surrogate;

pub use error::{Error, Result};
pub use flow::{FlowSolution, FunctionalityState};
pub use network::{ArcSpec, Element, InterdependencyLink, Network, NetworkSpec, NodeRef, NodeSpec, SpaceSpec};
pub use scenario::{DamageModel, Dataset, Encoding, Provenance, ScenarioSet};
pub use solver::{CostBreakdown, DamageScenario, RestorationPlan, SolverLimits, SolverMode};
pub use surrogate::{Activation, SurrogateModel};

/// Version tag of every on-disk format written by this crate.
pub const FORMAT_VERSIONS: &[(&str, &str)] = &[
    ("network", "restoro-network-v1"),
    ("scenario", "restoro-scenarios-v1"),
    ("dataset", "restoro-dataset-v1"),
    ("plan", "restoro-plan-v1"),
    ("model", "surrogate-v1"),
];
