//! Grounding: instantiation, static-fact filtering and relaxed reachability
//! pruning, plus export of ground tasks as parameterless PDDL.

mod export;
mod filter;
mod instantiate;

use serde::Serialize;
use thiserror::Error;

use crate::model::{GroundTask, LiftedTask};
use crate::normalize::{detect_statics, NormalizeError, DEFAULT_DNF_BUDGET};

pub use export::{export_names, to_lifted};
pub use filter::{filter_static_facts, fixed_facts, relaxed_reachability_filter, relaxed_reachable};
pub use instantiate::instantiate;

/// Default cap on the number of ground actions.
pub const DEFAULT_ACTION_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundConfig {
    pub dnf_budget: u128,
    pub action_cap: usize,
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig { dnf_budget: DEFAULT_DNF_BUDGET, action_cap: DEFAULT_ACTION_CAP }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroundError {
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error("more than {limit} {what}")]
    Cap { what: &'static str, limit: usize },
    #[error("no numeric value for duration {0}")]
    MissingDuration(String),
}

impl GroundError {
    /// Resource errors as opposed to malformed input.
    pub fn is_cap(&self) -> bool {
        matches!(self, GroundError::Cap { .. } | GroundError::Normalize(NormalizeError::DnfBlowup { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroundingReport {
    pub ops: usize,
    pub actions_pre: usize,
    pub actions_post: usize,
    pub facts_pre: usize,
    pub facts_post: usize,
    pub rules: usize,
}

/// Instantiate, filter static facts and prune relaxed-unreachable parts.
pub fn ground_task(t: &LiftedTask, cfg: &GroundConfig) -> Result<(GroundTask, GroundingReport), GroundError> {
    let statics = detect_statics(t);
    let g = instantiate(t, &statics, cfg)?;
    let actions_pre = g.actions.len();
    let facts_pre = g.facts.len();
    let g = relaxed_reachability_filter(&filter_static_facts(&g));
    let report = GroundingReport {
        ops: t.operators.len(),
        actions_pre,
        actions_post: g.actions.len(),
        facts_pre,
        facts_post: g.facts.len(),
        rules: g.rules.len(),
    };
    Ok((g, report))
}
