//! Deterministic generators for the bundled test corpus.

mod philosophers;
mod psr;
mod small;

use serde::Serialize;
use thiserror::Error;

use crate::model::LiftedTask;
use crate::parser::{parse_task, ParseError};

pub use philosophers::{philosophers_domain, philosophers_problem, PhilosophersVariant, TRANSITIONS};
pub use psr::{psr_domain, psr_network, psr_networks, psr_problem, PsrNetwork};
pub use small::{
    briefcase_problem, AIRPORT_DOMAIN, AIRPORT_PROBLEM, BAR_DOMAIN, BAR_PROBLEM, BRIEFCASE_DOMAIN, UMTS_DOMAIN,
    UMTS_PROBLEM,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixtureError {
    #[error("philosophers needs at least 2 processes, got {0}")]
    TooFewPhilosophers(usize),
    #[error("unknown network '{0}'")]
    UnknownNetwork(String),
    #[error("network {network} has no line {line}")]
    UnknownLine { network: String, line: String },
    #[error("fixture {name} does not parse: {error}")]
    Parse { name: String, error: ParseError },
}

/// What kind of constructs a fixture exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    Strips,
    ConditionalEffects,
    DerivedPredicates,
    Adl,
    TimedLiterals,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub name: String,
    pub kind: FixtureKind,
    pub domain: String,
    pub problem: String,
}

impl Fixture {
    pub fn task(&self) -> Result<LiftedTask, FixtureError> {
        parse_task(&self.domain, &self.problem)
            .map(|p| p.task)
            .map_err(|error| FixtureError::Parse { name: self.name.clone(), error })
    }
}

pub fn philosophers(n: usize, variant: PhilosophersVariant) -> Result<Fixture, FixtureError> {
    Ok(Fixture {
        name: format!("philosophers-{n}-{}", variant.tag()),
        kind: match variant {
            PhilosophersVariant::DerivedPredicates => FixtureKind::DerivedPredicates,
            PhilosophersVariant::Plain => FixtureKind::Adl,
        },
        domain: philosophers_domain(variant),
        problem: philosophers_problem(n)?,
    })
}

/// Lifted philosophers task with `n` processes.
pub fn gen_philosophers(n: usize, variant: PhilosophersVariant) -> Result<LiftedTask, FixtureError> {
    philosophers(n, variant)?.task()
}

pub fn psr(name: &str) -> Result<Fixture, FixtureError> {
    let net = psr_network(name)?;
    Ok(Fixture {
        name: format!("psr-{name}"),
        kind: FixtureKind::DerivedPredicates,
        domain: psr_domain(),
        problem: psr_problem(&net)?,
    })
}

/// Lifted PSR task for a curated network.
pub fn gen_psr_mini(name: &str) -> Result<LiftedTask, FixtureError> {
    psr(name)?.task()
}

pub fn briefcase(n: usize) -> Fixture {
    Fixture {
        name: format!("briefcase-{n}"),
        kind: FixtureKind::ConditionalEffects,
        domain: BRIEFCASE_DOMAIN.to_string(),
        problem: briefcase_problem(n),
    }
}

pub fn airport_mini() -> Fixture {
    Fixture {
        name: "airport-mini".into(),
        kind: FixtureKind::Strips,
        domain: AIRPORT_DOMAIN.into(),
        problem: AIRPORT_PROBLEM.into(),
    }
}

/// Single-achiever scheduling task.
pub fn umts_mini() -> Fixture {
    Fixture {
        name: "umts-mini".into(),
        kind: FixtureKind::Strips,
        domain: UMTS_DOMAIN.into(),
        problem: UMTS_PROBLEM.into(),
    }
}

pub fn bar() -> Fixture {
    Fixture {
        name: "bar".into(),
        kind: FixtureKind::TimedLiterals,
        domain: BAR_DOMAIN.into(),
        problem: BAR_PROBLEM.into(),
    }
}

/// Every bundled fixture, in a fixed order.
pub fn all_fixtures() -> Vec<Fixture> {
    let mut out = vec![
        philosophers(2, PhilosophersVariant::DerivedPredicates).unwrap(),
        philosophers(2, PhilosophersVariant::Plain).unwrap(),
        philosophers(3, PhilosophersVariant::DerivedPredicates).unwrap(),
        philosophers(3, PhilosophersVariant::Plain).unwrap(),
    ];
    out.extend(psr_networks().iter().map(|n| psr(n.name).unwrap()));
    out.push(briefcase(3));
    out.push(airport_mini());
    out.push(umts_mini());
    out.push(bar());
    out
}
