//! Parsing, normalization, grounding, compilation and structural analysis of
//! PDDL 2.2 planning tasks.

pub mod model;
pub mod parser;
pub mod normalize;
pub mod ground;
pub mod compile_ce;
pub mod compile_dp;
pub mod compile_til;
pub mod analyze;
pub mod fixtures;
