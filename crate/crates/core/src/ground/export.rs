//! Conversion of a ground task back into a printable, parameterless lifted task.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    Atom, Condition, ConditionalEffect, DerivedRule, DurationExpr, Durative, FactId, Formula, GroundTask,
    LiftedTask, Metric, Operator, Term, TypedVar, OBJECT_TYPE,
};

fn atom(g: &GroundTask, f: FactId) -> Atom {
    g.facts.atom(f).to_atom()
}

fn formula(g: &GroundTask, c: &Condition) -> Formula {
    let mut lits: Vec<Formula> = c.pos.iter().map(|&f| Formula::Atom(atom(g, f))).collect();
    lits.extend(c.neg.iter().map(|&f| Formula::not(Formula::Atom(atom(g, f)))));
    if lits.len() == 1 {
        lits.pop().unwrap()
    } else {
        Formula::And(lits)
    }
}

/// Names under which each ground action is exported: the flat name, with a
/// numeric suffix when two actions would otherwise collide.
pub fn export_names(g: &GroundTask) -> Vec<String> {
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::with_capacity(g.actions.len());
    for a in &g.actions {
        let base = a.flat_name();
        let mut name = base.clone();
        let mut k = 2;
        while used.contains(&name) {
            name = format!("{base}-{k}");
            k += 1;
        }
        used.insert(name.clone());
        out.push(name);
    }
    out
}

/// Every ground action becomes a parameterless operator, every fact an atom over
/// constants, and every ground rule a `:derived` rule with a constant head.
pub fn to_lifted(g: &GroundTask) -> LiftedTask {
    let mut t = LiftedTask::empty(&g.domain_name);
    t.problem_name = Some(g.name.clone());
    let mut predicates: BTreeMap<String, usize> = BTreeMap::new();
    for (_, a) in g.facts.iter() {
        predicates.insert(a.predicate.clone(), a.args.len());
        for c in &a.args {
            t.constants.insert(c.clone(), OBJECT_TYPE.to_string());
        }
    }
    for (p, k) in predicates {
        let params = (1..=k).map(|i| TypedVar::new(&format!("x{i}"), OBJECT_TYPE)).collect();
        t.predicates.insert(p, params);
    }
    let mut reqs: BTreeSet<&str> = [":strips"].into();
    let note = |c: &Condition, reqs: &mut BTreeSet<&str>| {
        if !c.neg.is_empty() {
            reqs.insert(":negative-preconditions");
        }
    };
    for (a, name) in g.actions.iter().zip(export_names(g)) {
        note(&a.precondition, &mut reqs);
        let mut effects = Vec::new();
        for e in &a.effects {
            note(&e.condition, &mut reqs);
            if !e.condition.is_empty() {
                reqs.insert(":conditional-effects");
            }
            if e.condition.is_empty() && e.adds.is_empty() && e.dels.is_empty() {
                continue;
            }
            effects.push(ConditionalEffect {
                params: Vec::new(),
                condition: if e.condition.is_empty() { Formula::truth() } else { formula(g, &e.condition) },
                adds: e.adds.iter().map(|&f| atom(g, f)).collect(),
                deletes: e.dels.iter().map(|&f| atom(g, f)).collect(),
            });
        }
        let pre = if a.precondition.is_empty() { Formula::truth() } else { formula(g, &a.precondition) };
        let mut op = Operator::new(&name, Vec::new(), pre);
        op.effects = effects;
        if let Some(d) = a.duration {
            reqs.insert(":durative-actions");
            op.durative = Some(Durative {
                duration: DurationExpr::Const(d),
                over_all: Formula::truth(),
                at_end: Formula::truth(),
                start_effects: Vec::new(),
            });
            t.metric = Some(Metric::Makespan);
        }
        op.normalize_effects();
        t.operators.push(op);
    }
    for r in &g.rules {
        note(&r.body, &mut reqs);
        reqs.insert(":derived-predicates");
        let head = atom(g, r.head);
        let body = if r.body.is_empty() { Formula::truth() } else { formula(g, &r.body) };
        t.derivation_rules.push(DerivedRule { head, parameters: Vec::new(), body });
    }
    note(&g.goal, &mut reqs);
    t.requirements = reqs.into_iter().map(String::from).collect();
    t.init = g.init.iter().map(|&f| g.facts.atom(f).clone()).collect();
    t.goal = if g.goal.is_empty() { Formula::truth() } else { formula(g, &g.goal) };
    debug_assert!(t.derivation_rules.iter().all(|r| r.head.args.iter().all(|a| matches!(a, Term::Const(_)))));
    t
}
