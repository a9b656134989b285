//! PDDL reader and canonical printer.

mod build;
pub mod diagnostics;
mod printer;
pub mod sexpr;

pub use build::{
    parse_domain, parse_domain_file, parse_problem, parse_problem_file, parse_task, Parsed,
    SUPPORTED_REQUIREMENTS,
};
pub use diagnostics::{ParseDiagnostic, ParseError, Severity, SourceSpan};
pub use printer::{print_domain, print_problem, print_task, PrintedTask};
