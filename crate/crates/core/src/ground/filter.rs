//! Static-fact filtering and relaxed reachability pruning.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use crate::model::{Condition, FactId, GroundTask};

/// Result of simplifying a condition against fixed fact values.
enum Simplified {
    Unsat,
    Cond(Condition),
}

fn simplify_condition(c: &Condition, fixed: &FixedBitSet, init: &FixedBitSet) -> Simplified {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &f in &c.pos {
        if fixed.contains(f.index()) {
            if !init.contains(f.index()) {
                return Simplified::Unsat;
            }
        } else {
            pos.push(f);
        }
    }
    for &f in &c.neg {
        if fixed.contains(f.index()) {
            if init.contains(f.index()) {
                return Simplified::Unsat;
            }
        } else {
            neg.push(f);
        }
    }
    Simplified::Cond(Condition::new(pos, neg))
}

/// Facts that no action adds or deletes and no rule derives.
pub fn fixed_facts(g: &GroundTask) -> FixedBitSet {
    let mut changed = g.empty_state();
    for a in &g.actions {
        for f in a.all_adds().chain(a.all_dels()) {
            changed.insert(f.index());
        }
    }
    for r in &g.rules {
        changed.insert(r.head.index());
    }
    let mut fixed = g.empty_state();
    fixed.insert_range(..);
    fixed.difference_with(&changed);
    fixed
}

/// Remove facts whose value never changes. Conditions on them are evaluated
/// against the initial state; actions, effects and rule bodies that can never hold
/// are dropped. Goal literals on such facts are kept when they are false so that
/// unsolvability stays visible.
pub fn filter_static_facts(g: &GroundTask) -> GroundTask {
    let fixed = fixed_facts(g);
    let init = g.initial_state();
    let mut out = g.clone();
    out.actions.clear();
    for a in &g.actions {
        let pre = match simplify_condition(&a.precondition, &fixed, &init) {
            Simplified::Unsat => continue,
            Simplified::Cond(c) => c,
        };
        let mut b = a.clone();
        b.precondition = pre;
        b.effects.clear();
        for e in &a.effects {
            if let Simplified::Cond(c) = simplify_condition(&e.condition, &fixed, &init) {
                let mut e = e.clone();
                e.condition = c;
                b.effects.push(e);
            }
        }
        if b.effects.is_empty() || !b.effects[0].condition.is_empty() {
            b.effects.insert(0, Default::default());
        }
        b.normalize_effects();
        out.actions.push(b);
    }
    out.rules = g
        .rules
        .iter()
        .filter_map(|r| match simplify_condition(&r.body, &fixed, &init) {
            Simplified::Unsat => None,
            Simplified::Cond(body) => Some(crate::model::GroundRule { head: r.head, body }),
        })
        .collect();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut keep = g.empty_state();
    keep.insert_range(..);
    keep.difference_with(&fixed);
    for &f in &g.goal.pos {
        if !fixed.contains(f.index()) || !init.contains(f.index()) {
            pos.push(f);
            keep.insert(f.index());
        }
    }
    for &f in &g.goal.neg {
        if !fixed.contains(f.index()) || init.contains(f.index()) {
            neg.push(f);
            keep.insert(f.index());
        }
    }
    out.goal = Condition::new(pos, neg);
    out.static_facts.clear();
    out.retain_facts(&keep)
}

/// Relaxed reachability fixpoint from the initial state. Rules are free achievers.
pub fn relaxed_reachable(g: &GroundTask) -> FixedBitSet {
    // Units: action preconditions (index 0), effects, then rules.
    struct Unit {
        need: Vec<FactId>,
        adds: Vec<FactId>,
        after: Option<usize>,
    }
    let mut units: Vec<Unit> = Vec::new();
    for a in &g.actions {
        let pre = units.len();
        units.push(Unit { need: a.precondition.pos.clone(), adds: Vec::new(), after: None });
        for e in &a.effects {
            units.push(Unit { need: e.condition.pos.clone(), adds: e.adds.clone(), after: Some(pre) });
        }
    }
    for r in &g.rules {
        units.push(Unit { need: r.body.pos.clone(), adds: vec![r.head], after: None });
    }
    let n = g.facts.len();
    let mut watchers: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut missing: Vec<usize> = Vec::with_capacity(units.len());
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); units.len()];
    for (i, u) in units.iter().enumerate() {
        let need: BTreeSet<FactId> = u.need.iter().copied().collect();
        for f in &need {
            watchers[f.index()].push(i);
        }
        let mut m = need.len();
        if let Some(p) = u.after {
            dependents[p].push(i);
            m += 1;
        }
        missing.push(m);
    }
    let mut reached = g.empty_state();
    let mut queue: Vec<FactId> = Vec::new();
    let mut ready: Vec<usize> = Vec::new();
    for &f in &g.init {
        if !reached.put(f.index()) {
            queue.push(f);
        }
    }
    for (i, &m) in missing.iter().enumerate() {
        if m == 0 {
            ready.push(i);
        }
    }
    loop {
        if let Some(u) = ready.pop() {
            for &f in &units[u].adds {
                if !reached.put(f.index()) {
                    queue.push(f);
                }
            }
            for &d in &dependents[u] {
                missing[d] -= 1;
                if missing[d] == 0 {
                    ready.push(d);
                }
            }
        } else if let Some(f) = queue.pop() {
            for &u in &watchers[f.index()] {
                missing[u] -= 1;
                if missing[u] == 0 {
                    ready.push(u);
                }
            }
        } else {
            break;
        }
    }
    reached
}

/// Drop actions, effects and rules whose positive conditions are relaxed
/// unreachable from the initial state, then drop unreachable facts other than goal
/// facts. Negative literals on unreachable facts hold everywhere and are removed.
pub fn relaxed_reachability_filter(g: &GroundTask) -> GroundTask {
    let r = relaxed_reachable(g);
    let reach = |c: &Condition| c.pos.iter().all(|f| r.contains(f.index()));
    let strip = |c: &Condition| {
        Condition::new(c.pos.clone(), c.neg.iter().copied().filter(|f| r.contains(f.index())).collect())
    };
    let mut out = g.clone();
    out.actions = g
        .actions
        .iter()
        .filter(|a| reach(&a.precondition))
        .map(|a| {
            let mut b = a.clone();
            b.precondition = strip(&a.precondition);
            b.effects = a
                .effects
                .iter()
                .enumerate()
                .filter(|(i, e)| *i == 0 || reach(&e.condition))
                .map(|(_, e)| {
                    let mut e = e.clone();
                    e.condition = strip(&e.condition);
                    e
                })
                .collect();
            b.normalize_effects();
            b
        })
        .collect();
    out.rules = g
        .rules
        .iter()
        .filter(|r| reach(&r.body))
        .map(|rule| crate::model::GroundRule { head: rule.head, body: strip(&rule.body) })
        .collect();
    let mut keep = r.clone();
    for f in g.goal.facts() {
        keep.insert(f.index());
    }
    out.retain_facts(&keep)
}
