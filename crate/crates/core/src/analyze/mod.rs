//! Structural metrics: planning graphs, relaxed plans, exact h⁺, brute-force
//! optima, plan validation and fact connectivity.

mod connectivity;
mod hplus;
mod plangraph;
mod relaxed;
mod report;
mod search;

use thiserror::Error;

pub use connectivity::{connectivity_stats, ConnectivityStats, Summary};
pub use hplus::{h_plus_oracle, HPlus};
pub use plangraph::{build_plangraph, plangraph_length, PlanGraphLayers, PlanGraphLength, PlanGraphMode};
pub use relaxed::{h_max_levels, relaxed_plan, RelaxedPlan};
pub use report::{measure_encoding, measure_ground, AnalysisOptions, AnalysisReport, RelaxedLength};
pub use search::{
    applicable, brute_force_plan, brute_force_plan_from, erase_bookkeeping, normalize_signature, reachable_states,
    sequentialize, signatures, validate_plan, BruteForce, PlanViolation, SearchMode, ViolationKind,
};

use crate::compile_ce::CeError;
use crate::ground::GroundError;
use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyzeError {
    #[error("{0}")]
    NotStrips(String),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Ce(#[from] CeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
