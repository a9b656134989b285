//! Normalization of formulas and tasks: quantifier expansion, negation normal
//! form, negation compilation, disjunctive normal form, static simplification and
//! disjunction splitting.

mod formula;
mod negation;
mod split;
mod statics;

use thiserror::Error;

pub use formula::{
    dnf_disjuncts, eliminate_imply, expand_quantifiers, is_dnf, is_nnf, projected_disjuncts, simplify,
    to_dnf, to_nnf,
};
pub(crate) use formula::enumerate;
pub use negation::{
    compile_negations, compile_negations_formula, compile_negations_ground, negated_name,
    negated_predicates,
};
pub use split::{split_disjunctions, GOAL_ACHIEVER_PREFIX, GOAL_REACHED};
pub use statics::{detect_statics, StaticInfo};

/// Default cap on the number of DNF disjuncts of a single formula.
pub const DEFAULT_DNF_BUDGET: u128 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("DNF would have {projected} disjuncts, more than the budget of {budget}")]
    DnfBlowup { projected: u128, budget: u128 },
    #[error("generated name '{0}' collides with an existing name")]
    NameCollision(String),
}
