//! Operator, effect and goal copies for disjunctive formulas.

use super::formula::{dnf_disjuncts, to_nnf};
use super::NormalizeError;
use crate::model::{Atom, ConditionalEffect, Formula, LiftedTask, Operator};

pub const GOAL_REACHED: &str = "goal-reached";
pub const GOAL_ACHIEVER_PREFIX: &str = "goal-achiever-";

fn conj(mut lits: Vec<Formula>) -> Formula {
    if lits.len() == 1 {
        lits.pop().unwrap()
    } else {
        Formula::And(lits)
    }
}

/// Split DNF preconditions, effect conditions and goals into copies with one
/// disjunct each. Formulas are converted to DNF first, with quantified
/// subformulas kept as leaves. Durative operators are left unchanged.
pub fn split_disjunctions(t: &LiftedTask, budget: u128) -> Result<LiftedTask, NormalizeError> {
    let mut out = t.clone();
    out.operators.clear();
    let names: std::collections::BTreeSet<String> = t.operators.iter().map(|o| o.name.clone()).collect();
    for op in &t.operators {
        if op.durative.is_some() {
            out.operators.push(op.clone());
            continue;
        }
        let mut effects = Vec::new();
        for e in &op.effects {
            let ds = dnf_disjuncts(&to_nnf(&e.condition), budget)?;
            if ds.len() == 1 {
                effects.push(ConditionalEffect { condition: conj(ds.into_iter().next().unwrap()), ..e.clone() });
                continue;
            }
            for d in ds {
                effects.push(ConditionalEffect { condition: conj(d), ..e.clone() });
            }
        }
        let ds = dnf_disjuncts(&to_nnf(&op.precondition), budget)?;
        if ds.len() == 1 {
            let mut o = op.clone();
            o.precondition = conj(ds.into_iter().next().unwrap());
            o.effects = effects;
            out.operators.push(o);
            continue;
        }
        for (i, d) in ds.into_iter().enumerate() {
            let name = format!("{}-dnf{}", op.name, i + 1);
            if names.contains(&name) {
                return Err(NormalizeError::NameCollision(name));
            }
            out.operators.push(Operator {
                name,
                parameters: op.parameters.clone(),
                precondition: conj(d),
                effects: effects.clone(),
                durative: None,
            });
        }
    }
    let ds = dnf_disjuncts(&to_nnf(&t.goal), budget)?;
    if ds.len() == 1 {
        out.goal = conj(ds.into_iter().next().unwrap());
        return Ok(out);
    }
    if t.predicates.contains_key(GOAL_REACHED) {
        return Err(NormalizeError::NameCollision(GOAL_REACHED.to_string()));
    }
    out.predicates.insert(GOAL_REACHED.to_string(), Vec::new());
    let reached = Atom::new(GOAL_REACHED, vec![]);
    for (i, d) in ds.into_iter().enumerate() {
        let name = format!("{GOAL_ACHIEVER_PREFIX}{}", i + 1);
        if names.contains(&name) {
            return Err(NormalizeError::NameCollision(name));
        }
        let mut o = Operator::new(&name, Vec::new(), conj(d));
        o.effects.push(ConditionalEffect::unconditional(vec![reached.clone()], vec![]));
        out.operators.push(o);
    }
    out.goal = Formula::Atom(reached);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_task;

    #[test]
    fn or_precondition_gives_two_operators() {
        let d = "(define (domain d) (:requirements :disjunctive-preconditions)
          (:predicates (a) (b) (c))
          (:action o :parameters () :precondition (or (a) (b)) :effect (c)))";
        let p = "(define (problem p) (:domain d) (:init (a)) (:goal (c)))";
        let t = parse_task(d, p).unwrap().task;
        let s = split_disjunctions(&t, 100).unwrap();
        let names: Vec<&str> = s.operators.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, vec!["o-dnf1", "o-dnf2"]);
        assert_eq!(s.operators[0].precondition.to_string(), "(a)");
        assert_eq!(s.operators[1].precondition.to_string(), "(b)");
        assert_eq!(s.goal.to_string(), "(c)");
        assert!(!s.predicates.contains_key(GOAL_REACHED));
    }

    #[test]
    fn disjunctive_goal_gets_achievers() {
        let d = "(define (domain d) (:requirements :disjunctive-preconditions)
          (:predicates (a) (b)))";
        let p = "(define (problem p) (:domain d) (:init) (:goal (or (a) (b))))";
        let t = parse_task(d, p).unwrap().task;
        let s = split_disjunctions(&t, 100).unwrap();
        assert_eq!(s.goal.to_string(), "(goal-reached)");
        assert_eq!(s.operators.len(), 2);
        assert_eq!(s.operators[1].name, "goal-achiever-2");
    }
}
