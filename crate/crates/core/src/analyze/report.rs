//! Per-instance metrics record.

use serde::{Serialize, Serializer};

use super::{
    connectivity_stats, h_plus_oracle, plangraph_length, relaxed_plan, AnalyzeError, HPlus, PlanGraphLength,
    PlanGraphMode, Summary,
};
use crate::compile_ce::{compile_conditional_effects, enumerate_outcomes, CeMethod, DEFAULT_CE_CAP};
use crate::ground::{ground_task, GroundConfig, GroundingReport};
use crate::model::{GroundTask, LiftedTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub ground: GroundConfig,
    /// Compute h⁺ of the initial state, bounded by this length.
    pub h_plus_cap: Option<usize>,
    pub ce_cap: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { ground: GroundConfig::default(), h_plus_cap: None, ce_cap: DEFAULT_CE_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxedLength {
    Steps(usize),
    Unsolvable,
}

impl Serialize for RelaxedLength {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RelaxedLength::Steps(n) => s.serialize_u64(*n as u64),
            RelaxedLength::Unsolvable => s.serialize_str("unsolvable"),
        }
    }
}

/// Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub instance: String,
    pub ops: usize,
    pub actions_pre: usize,
    pub actions_post: usize,
    pub facts_pre: usize,
    pub facts_post: usize,
    /// `None` for tasks with derivation rules.
    pub plangraph: Option<PlanGraphLength>,
    pub serial_plangraph: Option<PlanGraphLength>,
    pub relaxed_plan_len: RelaxedLength,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_plus: Option<HPlus>,
    pub adders: Summary,
    pub requirers: Summary,
    pub rules: usize,
    pub adders_excl_goal_achievers: Summary,
    pub requirers_excl_goal_achievers: Summary,
    pub bookkeeping_adders: Summary,
    pub bookkeeping_requirers: Summary,
}

/// Ground, prune and measure a lifted task.
pub fn measure_encoding(t: &LiftedTask, opts: &AnalysisOptions) -> Result<AnalysisReport, AnalyzeError> {
    let (g, report) = ground_task(t, &opts.ground)?;
    measure_ground(&g, report, opts)
}

/// Measure an already grounded and pruned task. Planning graphs are computed on
/// its STRIPS compilation. With conditional effects, h⁺ is computed on the
/// enumerated outcomes, or on the STRIPS compilation when enumeration exceeds
/// the cap.
pub fn measure_ground(
    g: &GroundTask,
    report: GroundingReport,
    opts: &AnalysisOptions,
) -> Result<AnalysisReport, AnalyzeError> {
    let strips = if g.rules.is_empty() {
        Some(compile_conditional_effects(g, CeMethod::Auto, opts.ce_cap)?.0)
    } else {
        None
    };
    let (plangraph, serial_plangraph) = match &strips {
        Some(s) => (
            Some(plangraph_length(s, PlanGraphMode::Parallel)?),
            Some(plangraph_length(s, PlanGraphMode::Serialized)?),
        ),
        None => (None, None),
    };
    let relaxed_plan_len = match relaxed_plan(g, &g.initial_state()).len() {
        Some(n) => RelaxedLength::Steps(n),
        None => RelaxedLength::Unsolvable,
    };
    let h_plus = match opts.h_plus_cap {
        None => None,
        Some(cap) => {
            let has_ce = g.actions.iter().any(|a| a.conditional_effect_count() > 0);
            if !has_ce {
                Some(h_plus_oracle(g, &g.initial_state(), cap)?)
            } else if let Ok(e) = enumerate_outcomes(g, opts.ce_cap) {
                Some(h_plus_oracle(&e, &e.initial_state(), cap)?)
            } else if let Some(s) = &strips {
                Some(h_plus_oracle(s, &s.initial_state(), cap)?)
            } else {
                None
            }
        }
    };
    let with = connectivity_stats(g, true);
    let without = connectivity_stats(g, false);
    Ok(AnalysisReport {
        instance: g.name.clone(),
        ops: report.ops,
        actions_pre: report.actions_pre,
        actions_post: report.actions_post,
        facts_pre: report.facts_pre,
        facts_post: report.facts_post,
        plangraph,
        serial_plangraph,
        relaxed_plan_len,
        h_plus,
        adders: with.adders_summary,
        requirers: with.requirers_summary,
        rules: report.rules,
        adders_excl_goal_achievers: without.adders_summary,
        requirers_excl_goal_achievers: without.requirers_summary,
        bookkeeping_adders: with.bookkeeping_adders,
        bookkeeping_requirers: with.bookkeeping_requirers,
    })
}
