//! Compilation of timed initial literals into a wrapper action and a chain of
//! literal actions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{
    validate_timed_literals, Atom, ConditionalEffect, DurationExpr, Durative, Formula, GroundAtom, LiftedTask,
    ModelError, Operator, Rational, TimedLiteral,
};

pub const TIL_COMPILED_SUFFIX: &str = "-tw-compiled";
pub const WRAPPER: &str = "wrapper";
pub const NO_WRAPPER: &str = "no-wrapper";
pub const WRAPPER_STARTED: &str = "wrapper-started";
pub const WRAPPER_ACTIVE: &str = "wrapper-active";
pub const LITERALS_DONE: &str = "literals-done";

pub fn literal_action(i: usize) -> String {
    format!("literal-{i}")
}

pub fn literal_started(i: usize) -> String {
    format!("literal-{i}-started")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TilError {
    #[error("timed initial literals can only be compiled into a durative task")]
    NotDurative,
    #[error("generated name '{0}' collides with an existing name")]
    NameCollision(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the plan does not contain the wrapper action")]
    MissingWrapper,
    #[error("the wrapper starts at {0}, not at time 0")]
    WrapperNotAtZero(String),
    #[error("action {0} occurs more than once")]
    Duplicate(String),
    #[error("the plan does not contain {0}")]
    MissingLiteral(String),
    #[error("{action} starts at {found} but its predecessor ends at {expected} (gap)")]
    Gap { action: String, expected: String, found: String },
    #[error("{action} starts at {found} but its predecessor ends at {expected} (overlap)")]
    Overlap { action: String, expected: String, found: String },
    #[error("{action} ends at {end}, after the wrapper ends at {horizon}")]
    OutsideWindow { action: String, end: String, horizon: String },
    #[error("{0} has no constant duration")]
    NoDuration(String),
}

/// Timed literals grouped by time point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilSchedule {
    pub timestamps: Vec<Rational>,
    pub groups: Vec<Vec<TimedLiteral>>,
    pub horizon: Rational,
}

impl TilSchedule {
    pub fn new(tls: &[TimedLiteral]) -> Self {
        let mut by_time: BTreeMap<Rational, Vec<TimedLiteral>> = BTreeMap::new();
        for tl in tls {
            by_time.entry(tl.time).or_default().push(tl.clone());
        }
        let timestamps: Vec<Rational> = by_time.keys().copied().collect();
        let horizon = timestamps.last().copied().unwrap_or_default();
        TilSchedule { timestamps, groups: by_time.into_values().collect(), horizon }
    }

    /// Duration of literal action `i` (1-based): the gap to the previous time point.
    pub fn duration(&self, i: usize) -> Rational {
        let prev = if i == 1 { Rational::default() } else { self.timestamps[i - 2] };
        self.timestamps[i - 1] - prev
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilCompilation {
    pub task: LiftedTask,
    pub schedule: TilSchedule,
    pub warnings: Vec<String>,
}

fn prop(name: &str) -> Atom {
    Atom::new(name, Vec::new())
}

fn conjoin_front(f: &Formula, a: Atom) -> Formula {
    match f {
        _ if f.is_true() => Formula::Atom(a),
        Formula::And(v) => {
            let mut w = vec![Formula::Atom(a)];
            w.extend(v.iter().cloned());
            Formula::And(w)
        }
        other => Formula::And(vec![Formula::Atom(a), other.clone()]),
    }
}

fn durative_op(name: &str, duration: Rational) -> Operator {
    let mut op = Operator::new(name, Vec::new(), Formula::truth());
    op.durative = Some(Durative {
        duration: DurationExpr::Const(duration),
        over_all: Formula::truth(),
        at_end: Formula::truth(),
        start_effects: Vec::new(),
    });
    op
}

/// Replace the timed initial literals of a durative task by a wrapper action
/// spanning all of them and one literal action per time point.
pub fn compile_timed_literals(t: &LiftedTask) -> Result<TilCompilation, TilError> {
    let schedule = TilSchedule::new(&t.timed_literals);
    if t.timed_literals.is_empty() {
        return Ok(TilCompilation {
            task: t.clone(),
            schedule,
            warnings: vec!["no timed initial literals to compile".to_string()],
        });
    }
    if !t.is_durative() {
        return Err(TilError::NotDurative);
    }
    validate_timed_literals(&t.timed_literals)?;
    let m = schedule.timestamps.len();
    let mut new_preds = vec![NO_WRAPPER.to_string(), WRAPPER_STARTED.to_string(), WRAPPER_ACTIVE.to_string()];
    new_preds.extend((1..=m).map(literal_started));
    new_preds.push(LITERALS_DONE.to_string());
    let mut new_ops = vec![WRAPPER.to_string()];
    new_ops.extend((1..=m).map(literal_action));
    let mut out = t.clone();
    for p in &new_preds {
        if t.predicates.contains_key(p) {
            return Err(TilError::NameCollision(p.clone()));
        }
        out.predicates.insert(p.clone(), Vec::new());
    }
    for o in &new_ops {
        if t.operator(o).is_some() {
            return Err(TilError::NameCollision(o.clone()));
        }
    }
    for op in &mut out.operators {
        op.precondition = conjoin_front(&op.precondition, prop(WRAPPER_STARTED));
    }
    let mut wrapper = durative_op(WRAPPER, schedule.horizon);
    wrapper.precondition = Formula::Atom(prop(NO_WRAPPER));
    if let Some(d) = &mut wrapper.durative {
        d.start_effects.push(ConditionalEffect::unconditional(
            vec![prop(WRAPPER_STARTED), prop(WRAPPER_ACTIVE), prop(&literal_started(1))],
            vec![prop(NO_WRAPPER)],
        ));
    }
    wrapper.effects.push(ConditionalEffect::unconditional(vec![], vec![prop(WRAPPER_ACTIVE)]));
    out.operators.push(wrapper);
    for (i, group) in schedule.groups.iter().enumerate() {
        let i = i + 1;
        let mut op = durative_op(&literal_action(i), schedule.duration(i));
        if let Some(d) = &mut op.durative {
            d.over_all = Formula::And(vec![Formula::Atom(prop(WRAPPER_ACTIVE)), Formula::Atom(prop(&literal_started(i)))]);
        }
        let mut adds = Vec::new();
        let mut dels = vec![prop(&literal_started(i))];
        adds.push(if i < m { prop(&literal_started(i + 1)) } else { prop(LITERALS_DONE) });
        for tl in group {
            if tl.positive {
                adds.push(tl.atom.to_atom());
            } else {
                dels.push(tl.atom.to_atom());
            }
        }
        op.effects.push(ConditionalEffect::unconditional(adds, dels));
        out.operators.push(op);
    }
    out.init.insert(GroundAtom::new(NO_WRAPPER, &[]));
    out.goal = conjoin_front(&t.goal, prop(LITERALS_DONE));
    out.timed_literals.clear();
    out.requirements.remove(":timed-initial-literals");
    out.requirements.insert(":durative-actions".to_string());
    Ok(TilCompilation { task: out, schedule, warnings: Vec::new() })
}

fn fmt(r: Rational) -> String {
    crate::model::rational::format_number(&r)
}

fn const_duration(t: &LiftedTask, name: &str) -> Result<Rational, TilError> {
    match t.operator(name).and_then(|o| o.durative.as_ref()).map(|d| &d.duration) {
        Some(DurationExpr::Const(r)) => Ok(*r),
        _ => Err(TilError::NoDuration(name.to_string())),
    }
}

/// Timed literal events induced by a schedule of the compiled task. `plan` holds
/// `(start time, action)` pairs; action names may be given with or without
/// parentheses. The wrapper must start at 0 and the literal actions must run back
/// to back inside it. Events are sorted by time, atom and polarity.
pub fn extract_til_trace(plan: &[(Rational, String)], t: &LiftedTask) -> Result<Vec<TimedLiteral>, TilError> {
    let m = (1..).take_while(|&i| t.operator(&literal_action(i)).is_some()).count();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut starts: BTreeMap<String, Rational> = BTreeMap::new();
    for (time, name) in plan {
        let n = name.trim().trim_start_matches('(').trim_end_matches(')').trim().to_string();
        if n == WRAPPER || n.starts_with("literal-") {
            if starts.insert(n.clone(), *time).is_some() {
                return Err(TilError::Duplicate(n));
            }
        }
    }
    let w = *starts.get(WRAPPER).ok_or(TilError::MissingWrapper)?;
    if w != Rational::default() {
        return Err(TilError::WrapperNotAtZero(fmt(w)));
    }
    let horizon = const_duration(t, WRAPPER)?;
    let mut expected = Rational::default();
    let mut events = Vec::new();
    for i in 1..=m {
        let name = literal_action(i);
        let s = *starts.get(&name).ok_or_else(|| TilError::MissingLiteral(name.clone()))?;
        if s > expected {
            return Err(TilError::Gap { action: name, expected: fmt(expected), found: fmt(s) });
        }
        if s < expected {
            return Err(TilError::Overlap { action: name, expected: fmt(expected), found: fmt(s) });
        }
        let end = s + const_duration(t, &name)?;
        if end > horizon {
            return Err(TilError::OutsideWindow { action: name, end: fmt(end), horizon: fmt(horizon) });
        }
        let op = t.operator(&name).unwrap();
        let bookkeeping = |a: &Atom| a.predicate == LITERALS_DONE || a.predicate.starts_with("literal-");
        for e in &op.effects {
            for (atoms, positive) in [(&e.adds, true), (&e.deletes, false)] {
                for a in atoms.iter().filter(|a| !bookkeeping(a)) {
                    events.push(TimedLiteral { time: end, atom: a.to_ground().expect("ground"), positive });
                }
            }
        }
        expected = end;
    }
    events.sort_by(|a, b| (a.time, &a.atom, a.positive).cmp(&(b.time, &b.atom, b.positive)));
    Ok(events)
}

/// The schedule that starts the wrapper at 0 and every literal action as soon as
/// its predecessor ends.
pub fn canonical_schedule(t: &LiftedTask) -> Result<Vec<(Rational, String)>, TilError> {
    let mut plan = vec![(Rational::default(), format!("({WRAPPER})"))];
    let mut now = Rational::default();
    let mut i = 1;
    while t.operator(&literal_action(i)).is_some() {
        plan.push((now, format!("({})", literal_action(i))));
        now += const_duration(t, &literal_action(i))?;
        i += 1;
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_task;

    const DOMAIN: &str = "(define (domain bar) (:requirements :durative-actions :timed-initial-literals)
      (:predicates (have-to-work) (bar-open) (drunk))
      (:durative-action drink :parameters () :duration (= ?duration 1)
        :condition (at start (bar-open)) :effect (at end (drunk))))";
    const PROBLEM: &str = "(define (problem evening) (:domain bar)
      (:init (at 9 (have-to-work)) (at 19 (not (have-to-work))) (at 19 (bar-open)) (at 23 (not (bar-open))))
      (:goal (drunk)))";

    #[test]
    fn single_literal() {
        let d = DOMAIN;
        let p = "(define (problem p) (:domain bar) (:init (at 5 (bar-open))) (:goal (drunk)))";
        let t = parse_task(d, p).unwrap().task;
        let c = compile_timed_literals(&t).unwrap();
        assert_eq!(c.schedule.horizon, Rational::from_integer(5));
        assert_eq!(c.schedule.duration(1), Rational::from_integer(5));
        assert_eq!(c.task.operators.len(), t.operators.len() + 2);
    }

    #[test]
    fn bar_example_shape() {
        let t = parse_task(DOMAIN, PROBLEM).unwrap().task;
        let c = compile_timed_literals(&t).unwrap();
        assert_eq!(c.task.operators.len(), 1 + 4);
        assert_eq!(c.task.predicates.len(), t.predicates.len() + 3 + 4);
        assert!(c.task.timed_literals.is_empty());
        assert_eq!(c.task.operators[0].precondition.to_string(), "(and (wrapper-started) (bar-open))");
        assert_eq!(c.task.goal.to_string(), "(and (literals-done) (drunk))");
        let lit2 = c.task.operator("literal-2").unwrap();
        assert_eq!(lit2.effects[0].adds.len(), 2);
        assert_eq!(lit2.effects[0].deletes.len(), 2);
    }

    #[test]
    fn gap_is_rejected() {
        let t = parse_task(DOMAIN, PROBLEM).unwrap().task;
        let c = compile_timed_literals(&t).unwrap().task;
        let mut plan = canonical_schedule(&c).unwrap();
        plan[2].0 += Rational::from_integer(1);
        assert!(matches!(extract_til_trace(&plan, &c), Err(TilError::Gap { .. })));
        plan[2].0 -= Rational::from_integer(2);
        assert!(matches!(extract_til_trace(&plan, &c), Err(TilError::Overlap { .. })));
        plan[0].0 = Rational::from_integer(1);
        assert!(matches!(extract_til_trace(&plan, &c), Err(TilError::WrapperNotAtZero(_))));
    }

    #[test]
    fn empty_chain_empty_trace() {
        let t = parse_task(DOMAIN, PROBLEM).unwrap().task;
        assert!(extract_til_trace(&[], &t).unwrap().is_empty());
    }

    #[test]
    fn non_durative_rejected() {
        let d = "(define (domain d) (:requirements :timed-initial-literals) (:predicates (p))
          (:action a :parameters () :effect (p)))";
        let p = "(define (problem p) (:domain d) (:init (at 3 (p))) (:goal (p)))";
        let t = parse_task(d, p).unwrap().task;
        assert_eq!(compile_timed_literals(&t).unwrap_err(), TilError::NotDurative);
    }
}
