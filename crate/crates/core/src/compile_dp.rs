//! Elimination of derivation rules from ground tasks.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    stratify_predicates, Condition, DerivedEvaluator, DerivedRule, FactId, GroundAction, GroundAtom, GroundEffect,
    GroundTask, ModelError,
};
use crate::normalize::to_nnf;

pub const NORMAL_MODE: &str = "normal-mode";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DpError {
    #[error("rule for {rule} uses derived predicate {predicate} negatively")]
    NegativeDependency { rule: String, predicate: String },
    #[error("derived fact {fact} occurs negated in {context}; use the fixpoint-mode compilation instead")]
    NegatedDerived { fact: String, context: String },
    #[error("generated name '{0}' collides with an existing name")]
    NameCollision(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Dependencies between derived predicates: `(head, body predicate, positive)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RuleDependencyGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String, bool)>,
    /// Derived predicates grouped into strata, dependencies first.
    pub strata: Vec<Vec<String>>,
}

impl RuleDependencyGraph {
    pub fn negative_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.2).count()
    }
}

fn build_graph(rules: Vec<(String, Vec<(String, bool)>)>) -> Result<RuleDependencyGraph, DpError> {
    let nodes: BTreeSet<String> = rules.iter().map(|(h, _)| h.clone()).collect();
    let mut edges = BTreeSet::new();
    for (h, body) in &rules {
        for (p, positive) in body {
            if nodes.contains(p) {
                edges.insert((h.clone(), p.clone(), *positive));
            }
        }
    }
    if let Some((h, p, _)) = edges.iter().find(|e| !e.2) {
        return Err(DpError::NegativeDependency { rule: h.clone(), predicate: p.clone() });
    }
    let mut triples: Vec<(String, String, bool)> = nodes.iter().map(|n| (n.clone(), n.clone(), false)).collect();
    triples.extend(edges.iter().map(|(h, p, pos)| (h.clone(), p.clone(), !pos)));
    let strata = stratify_predicates(&triples)?;
    Ok(RuleDependencyGraph { nodes: nodes.into_iter().collect(), edges: edges.into_iter().collect(), strata })
}

/// Dependency graph of lifted rules. Any negative occurrence of a derived
/// predicate in a rule body is rejected.
pub fn check_stratification(rules: &[DerivedRule]) -> Result<RuleDependencyGraph, DpError> {
    build_graph(
        rules
            .iter()
            .map(|r| {
                let mut body = Vec::new();
                to_nnf(&r.body).visit_literals(&mut |a, positive| body.push((a.predicate.clone(), positive)));
                (r.head.predicate.clone(), body)
            })
            .collect(),
    )
}

/// Dependency graph of the ground rules of `g`, checked like [`check_stratification`].
pub fn check_ground_stratification(g: &GroundTask) -> Result<RuleDependencyGraph, DpError> {
    let pred = |f: FactId| g.facts.atom(f).predicate.clone();
    build_graph(
        g.rules
            .iter()
            .map(|r| {
                let body = r
                    .body
                    .pos
                    .iter()
                    .map(|&f| (pred(f), true))
                    .chain(r.body.neg.iter().map(|&f| (pred(f), false)))
                    .collect();
                (pred(r.head), body)
            })
            .collect(),
    )
}

/// Basic predicates each derived predicate depends on, directly or through
/// other derived predicates.
fn basic_cone(g: &GroundTask) -> BTreeMap<String, BTreeSet<String>> {
    let pred = |f: FactId| g.facts.atom(f).predicate.clone();
    let derived = g.derived_predicates();
    let mut direct: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in &g.rules {
        let e = direct.entry(pred(r.head)).or_default();
        e.extend(r.body.facts().map(pred));
    }
    let mut cone = BTreeMap::new();
    for p in &derived {
        let mut seen = BTreeSet::new();
        let mut stack = vec![p.clone()];
        let mut basic = BTreeSet::new();
        while let Some(q) = stack.pop() {
            if !seen.insert(q.clone()) {
                continue;
            }
            for b in direct.get(&q).into_iter().flatten() {
                if derived.contains(b) {
                    stack.push(b.clone());
                } else {
                    basic.insert(b.clone());
                }
            }
        }
        cone.insert(p.clone(), basic);
    }
    cone
}

fn changed_predicates(g: &GroundTask, a: &GroundAction) -> BTreeSet<String> {
    a.all_adds().chain(a.all_dels()).map(|f| g.facts.atom(f).predicate.clone()).collect()
}

/// Replace each rule by an action deriving its head. Every action that may change
/// the truth of a derived predicate deletes all of its facts, so derived facts
/// must be re-established after each change. Sound only when derived facts are
/// never needed false.
pub fn compile_rules_to_actions(g: &GroundTask) -> Result<GroundTask, DpError> {
    if g.rules.is_empty() {
        return Ok(g.clone());
    }
    check_ground_stratification(g)?;
    let derived = g.derived_facts();
    let negated = |c: &Condition, context: &dyn Fn() -> String| -> Result<(), DpError> {
        match c.neg.iter().find(|f| derived.contains(f)) {
            Some(&f) => Err(DpError::NegatedDerived { fact: g.facts.atom(f).to_string(), context: context() }),
            None => Ok(()),
        }
    };
    for a in &g.actions {
        negated(&a.precondition, &|| a.signature())?;
        for e in &a.effects {
            negated(&e.condition, &|| format!("an effect condition of {}", a.signature()))?;
        }
    }
    for r in &g.rules {
        negated(&r.body, &|| format!("the rule for {}", g.facts.atom(r.head)))?;
    }
    negated(&g.goal, &|| "the goal".to_string())?;

    let cone = basic_cone(g);
    let mut by_pred: BTreeMap<String, Vec<FactId>> = BTreeMap::new();
    for &f in &derived {
        by_pred.entry(g.facts.atom(f).predicate.clone()).or_default().push(f);
    }
    let mut out = g.clone();
    out.rules.clear();
    for a in &mut out.actions {
        let changed = changed_predicates(g, a);
        let mut dels = Vec::new();
        for (p, basic) in &cone {
            if !basic.is_disjoint(&changed) {
                dels.extend(&by_pred[p]);
            }
        }
        if !dels.is_empty() {
            let adds = a.effects[0].adds.clone();
            a.effects[0].dels.extend(dels.into_iter().filter(|d| !adds.contains(d)));
            a.effects[0].normalize();
        }
    }
    let ops: BTreeSet<String> = g.actions.iter().map(|a| a.op.clone()).collect();
    let mut counts: BTreeMap<FactId, usize> = BTreeMap::new();
    for r in &g.rules {
        let atom = g.facts.atom(r.head);
        let k = counts.entry(r.head).or_default();
        *k += 1;
        let op = if *k == 1 { format!("derive-{}", atom.predicate) } else { format!("derive-{}-{k}", atom.predicate) };
        if ops.contains(&op) {
            return Err(DpError::NameCollision(op));
        }
        let mut a = GroundAction::new(&op, atom.args.clone(), r.body.clone(), GroundEffect::unconditional(vec![r.head], vec![]));
        a.bookkeeping = true;
        out.actions.push(a);
    }
    Ok(out)
}

/// Minimal strata: a derived predicate sits at the lowest level not below any
/// positive dependency and above every negative one. Returns the level of each
/// rule and the number of levels.
pub fn rule_levels(g: &GroundTask) -> Result<(Vec<usize>, usize), DpError> {
    let pred = |f: FactId| g.facts.atom(f).predicate.clone();
    let mut triples = Vec::new();
    for r in &g.rules {
        let h = pred(r.head);
        triples.push((h.clone(), h.clone(), false));
        triples.extend(r.body.pos.iter().map(|&f| (h.clone(), pred(f), false)));
        triples.extend(r.body.neg.iter().map(|&f| (h.clone(), pred(f), true)));
    }
    let sccs = stratify_predicates(&triples)?;
    let mut level: BTreeMap<String, usize> = BTreeMap::new();
    for comp in &sccs {
        let members: BTreeSet<&String> = comp.iter().collect();
        let mut l = 0;
        for (h, b, neg) in &triples {
            if members.contains(h) && !members.contains(b) {
                if let Some(&lb) = level.get(b) {
                    l = l.max(lb + usize::from(*neg));
                }
            }
        }
        for p in comp {
            level.insert(p.clone(), l);
        }
    }
    let levels: Vec<usize> = g.rules.iter().map(|r| level[&pred(r.head)]).collect();
    let n = levels.iter().map(|l| l + 1).max().unwrap_or(0);
    Ok((levels, n))
}

/// Compile rules into a fixpoint phase. Normal actions require `normal-mode`;
/// those changing a predicate used in a rule body of stratum `s` leave normal mode,
/// clear the derived facts of strata `s` and above and enter `fixpoint-mode-s`.
/// Per stratum, `derive-s` fires every applicable rule at once and sets
/// `changes-made-s` if a new fact was derived; `fixpoint-test-s` either resets the
/// flag or moves on to the next stratum, and to normal mode after the last one.
pub fn compile_fixpoint_mode(g: &GroundTask) -> Result<GroundTask, DpError> {
    if g.rules.is_empty() {
        return Ok(g.clone());
    }
    let (levels, n) = rule_levels(g)?;
    let pred = |f: FactId| g.facts.atom(f).predicate.clone();
    let mut out = g.clone();
    out.rules.clear();
    let fresh = |out: &mut GroundTask, name: String| -> Result<FactId, DpError> {
        let id = out.add_fresh_fact(GroundAtom::new(&name, &[])).ok_or(DpError::NameCollision(name))?;
        out.bookkeeping_facts.insert(id);
        Ok(id)
    };
    let normal = fresh(&mut out, NORMAL_MODE.to_string())?;
    let mut mode = Vec::new();
    let mut changes = Vec::new();
    let mut applied = Vec::new();
    for s in 1..=n {
        mode.push(fresh(&mut out, format!("fixpoint-mode-{s}"))?);
        changes.push(fresh(&mut out, format!("changes-made-{s}"))?);
        applied.push(fresh(&mut out, format!("derive-applied-{s}"))?);
    }
    // Basic predicates read by the rules of each stratum, and derived facts per stratum.
    let mut reads: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n];
    let mut facts_at: Vec<BTreeSet<FactId>> = vec![BTreeSet::new(); n];
    for (r, &l) in g.rules.iter().zip(&levels) {
        reads[l].extend(r.body.facts().map(pred));
        facts_at[l].insert(r.head);
    }
    for a in &mut out.actions {
        a.precondition = a.precondition.conjoin(&Condition::positive(vec![normal]));
        let changed = changed_predicates(g, a);
        let Some(s0) = (0..n).find(|&s| !reads[s].is_disjoint(&changed)) else {
            continue;
        };
        let base = &mut a.effects[0];
        base.dels.push(normal);
        base.adds.push(mode[s0]);
        for facts in &facts_at[s0..] {
            base.dels.extend(facts.iter().filter(|f| !base.adds.contains(f)));
        }
        base.normalize();
    }
    let ops: BTreeSet<String> = g.actions.iter().map(|a| a.op.clone()).collect();
    for s in 0..n {
        for name in [format!("derive-{}", s + 1), format!("fixpoint-test-{}", s + 1)] {
            if ops.contains(&name) {
                return Err(DpError::NameCollision(name));
            }
        }
        let mut derive = GroundAction::new(
            &format!("derive-{}", s + 1),
            Vec::new(),
            Condition::positive(vec![mode[s]]),
            GroundEffect::unconditional(vec![applied[s]], vec![]),
        );
        for (r, &l) in g.rules.iter().zip(&levels) {
            if l == s {
                derive.effects.push(GroundEffect {
                    condition: r.body.conjoin(&Condition::new(vec![], vec![r.head])),
                    adds: vec![r.head, changes[s]],
                    dels: vec![],
                });
            }
        }
        derive.normalize_effects();
        derive.bookkeeping = true;
        out.actions.push(derive);
        let next = if s + 1 < n { mode[s + 1] } else { normal };
        let mut test = GroundAction::new(
            &format!("fixpoint-test-{}", s + 1),
            Vec::new(),
            Condition::positive(vec![mode[s], applied[s]]),
            GroundEffect::unconditional(vec![], vec![applied[s]]),
        );
        test.effects.push(GroundEffect {
            condition: Condition::positive(vec![changes[s]]),
            adds: vec![],
            dels: vec![changes[s]],
        });
        test.effects.push(GroundEffect {
            condition: Condition::new(vec![], vec![changes[s]]),
            adds: vec![next],
            dels: vec![mode[s]],
        });
        test.bookkeeping = true;
        out.actions.push(test);
    }
    let eval = DerivedEvaluator::new(g)?;
    let full = eval.closure(&g.initial_state());
    out.init = full.ones().map(|i| FactId(i as u32)).collect();
    out.init.push(normal);
    out.goal = out.goal.conjoin(&Condition::positive(vec![normal]));
    Ok(out)
}

/// Variant suffix of tasks with derivation rules compiled away.
pub const DP_COMPILED_SUFFIX: &str = "-dp-compiled";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, Formula, Term};
    use crate::normalize::compile_negations_ground;

    fn trans_rule() -> DerivedRule {
        // (trans ?x ?z) <= (or (edge ?x ?z) (exists ?y (and (edge ?x ?y) (trans ?y ?z))))
        let v = |n: &str| Term::var(n);
        DerivedRule {
            head: Atom::new("trans", vec![v("x"), v("z")]),
            parameters: vec![],
            body: Formula::Or(vec![
                Formula::atom("edge", vec![v("x"), v("z")]),
                Formula::And(vec![Formula::atom("edge", vec![v("x"), v("y")]), Formula::atom("trans", vec![v("y"), v("z")])]),
            ]),
        }
    }

    #[test]
    fn positive_recursion_single_stratum() {
        let g = check_stratification(&[trans_rule()]).unwrap();
        assert_eq!(g.strata, vec![vec!["trans".to_string()]]);
        assert_eq!(g.negative_edges(), 0);
    }

    #[test]
    fn negated_derived_body_rejected() {
        let v = |n: &str| Term::var(n);
        let p = DerivedRule { head: Atom::new("p", vec![v("x")]), parameters: vec![], body: Formula::atom("b", vec![v("x")]) };
        let q = DerivedRule {
            head: Atom::new("q", vec![v("x")]),
            parameters: vec![],
            body: Formula::not(Formula::atom("p", vec![v("x")])),
        };
        assert!(matches!(check_stratification(&[p, q]), Err(DpError::NegativeDependency { .. })));
        assert_eq!(check_stratification(&[]).unwrap(), RuleDependencyGraph::default());
    }

    fn chain() -> GroundTask {
        // b -> d1 (derived), action flips b, goal d1.
        let mut g = GroundTask::new("t", "d");
        let b = g.facts.intern(GroundAtom::new("b", &[]));
        let d = g.facts.intern(GroundAtom::new("d", &[]));
        g.actions.push(GroundAction::new("set", vec![], Condition::default(), GroundEffect::unconditional(vec![b], vec![])));
        g.rules.push(crate::model::GroundRule { head: d, body: Condition::positive(vec![b]) });
        g.goal = Condition::positive(vec![d]);
        g
    }

    #[test]
    fn rules_to_actions_shape() {
        let h = compile_rules_to_actions(&chain()).unwrap();
        assert!(h.rules.is_empty());
        assert_eq!(h.actions.len(), 2);
        assert_eq!(h.actions[1].signature(), "(derive-d)");
        assert!(h.actions[1].bookkeeping);
        // set changes b, which d depends on.
        assert_eq!(h.actions[0].effects[0].dels, vec![FactId(1)]);
    }

    #[test]
    fn rules_to_actions_rejects_negated_derived() {
        let mut g = chain();
        g.goal = Condition::new(vec![], vec![FactId(1)]);
        assert!(matches!(compile_rules_to_actions(&g), Err(DpError::NegatedDerived { .. })));
    }

    #[test]
    fn fixpoint_mode_shape() {
        let h = compile_fixpoint_mode(&chain()).unwrap();
        let names: Vec<String> = h.actions.iter().map(|a| a.op.clone()).collect();
        assert_eq!(names, vec!["set", "derive-1", "fixpoint-test-1"]);
        assert!(h.fact(NORMAL_MODE, &[]).is_some());
        assert!(compile_negations_ground(&h).is_ok());
    }

    #[test]
    fn no_rules_unchanged() {
        let mut g = chain();
        g.rules.clear();
        assert_eq!(compile_rules_to_actions(&g).unwrap(), g);
        assert_eq!(compile_fixpoint_mode(&g).unwrap(), g);
    }
}
