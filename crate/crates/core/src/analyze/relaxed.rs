//! Relaxed planning graph and FF-style relaxed plan extraction.

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;

use crate::model::{Condition, GroundTask, State};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelaxedPlan {
    /// Action indices, layer by layer, lowest index first within a layer.
    Plan(Vec<usize>),
    Unsolvable,
}

impl RelaxedPlan {
    pub fn len(&self) -> Option<usize> {
        match self {
            RelaxedPlan::Plan(p) => Some(p.len()),
            RelaxedPlan::Unsolvable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Achiever {
    State,
    Rule(usize),
    /// Action index and effect index.
    Action(usize, usize),
}

struct Layers {
    level: Vec<Option<usize>>,
    achiever: Vec<Option<Achiever>>,
}

fn reached(c: &Condition, r: &FixedBitSet) -> bool {
    c.pos.iter().all(|f| r.contains(f.index()))
}

/// Close `r` under the rules, recording rule achievers at `lvl`.
fn close_rules(g: &GroundTask, r: &mut FixedBitSet, layers: &mut Layers, lvl: usize) {
    loop {
        let mut changed = false;
        for (i, rule) in g.rules.iter().enumerate() {
            let h = rule.head.index();
            if !r.contains(h) && reached(&rule.body, r) {
                r.insert(h);
                layers.level[h] = Some(lvl);
                layers.achiever[h] = Some(Achiever::Rule(i));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

fn build(g: &GroundTask, state: &State) -> (Layers, bool) {
    let n = g.facts.len();
    let mut layers = Layers { level: vec![None; n], achiever: vec![None; n] };
    let mut r = FixedBitSet::with_capacity(n);
    for f in state.ones() {
        r.insert(f);
        layers.level[f] = Some(0);
        layers.achiever[f] = Some(Achiever::State);
    }
    close_rules(g, &mut r, &mut layers, 0);
    let mut lvl = 0;
    loop {
        if reached(&g.goal, &r) {
            return (layers, true);
        }
        let mut next = r.clone();
        for (ai, a) in g.actions.iter().enumerate() {
            if !reached(&a.precondition, &r) {
                continue;
            }
            for (ei, e) in a.effects.iter().enumerate() {
                if !reached(&e.condition, &r) {
                    continue;
                }
                for f in &e.adds {
                    let i = f.index();
                    if !next.contains(i) {
                        next.insert(i);
                        layers.level[i] = Some(lvl + 1);
                        layers.achiever[i] = Some(Achiever::Action(ai, ei));
                    }
                }
            }
        }
        if next == r {
            return (layers, false);
        }
        lvl += 1;
        close_rules(g, &mut next, &mut layers, lvl);
        r = next;
    }
}

/// Relaxed plan from `state`: negative conditions and deletes are ignored, rules
/// are free. Goals are achieved at their first layer by the first achiever found
/// there, whose conditions become goals at lower layers.
pub fn relaxed_plan(g: &GroundTask, state: &State) -> RelaxedPlan {
    let (layers, ok) = build(g, state);
    if !ok {
        return RelaxedPlan::Unsolvable;
    }
    let max = g.goal.pos.iter().filter_map(|f| layers.level[f.index()]).max().unwrap_or(0);
    let mut goals: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); max + 1];
    // Facts made true at a layer by an already selected action.
    let mut marked: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(g.facts.len()); max + 1];
    let mut selected: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); max + 1];
    let mut used: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); max + 1];
    for f in &g.goal.pos {
        let i = f.index();
        goals[layers.level[i].unwrap()].insert(i);
    }
    for l in (1..=max).rev() {
        // Rule achievers stay on this layer; process until no new goals appear.
        let mut done: BTreeSet<usize> = BTreeSet::new();
        loop {
            let Some(&f) = goals[l].iter().find(|f| !done.contains(f)) else { break };
            done.insert(f);
            if marked[l].contains(f) {
                continue;
            }
            match layers.achiever[f].unwrap() {
                Achiever::State => {}
                Achiever::Rule(ri) => {
                    for b in &g.rules[ri].body.pos {
                        let bl = layers.level[b.index()].unwrap();
                        goals[bl].insert(b.index());
                    }
                }
                Achiever::Action(ai, ei) => {
                    // An action already selected here may still need the condition of another effect.
                    if used[l - 1].insert((ai, ei)) {
                        let a = &g.actions[ai];
                        let fresh = selected[l - 1].insert(ai);
                        let effects = if fresh { vec![0, ei] } else { vec![ei] };
                        let mut cond = a.effects[ei].condition.clone();
                        if fresh {
                            cond = a.precondition.conjoin(&cond);
                        }
                        for &e in &effects {
                            for x in &a.effects[e].adds {
                                marked[l].insert(x.index());
                            }
                        }
                        for p in &cond.pos {
                            let pl = layers.level[p.index()].unwrap();
                            goals[pl].insert(p.index());
                        }
                    }
                }
            }
        }
    }
    RelaxedPlan::Plan(selected.into_iter().flat_map(|s| s.into_iter()).collect())
}

/// Relaxed layer of every fact from `state` (`None` when relaxed unreachable).
pub fn h_max_levels(g: &GroundTask, state: &State) -> Vec<Option<usize>> {
    build(g, state).0.level
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FactId, GroundAction, GroundAtom, GroundEffect};

    fn chain() -> GroundTask {
        let mut g = GroundTask::new("t", "d");
        let f: Vec<FactId> = (0..4).map(|i| g.facts.intern(GroundAtom::new(&format!("f{i}"), &[]))).collect();
        g.init = vec![f[0]];
        for i in 0..3 {
            g.actions.push(GroundAction::new(
                &format!("a{i}"),
                vec![],
                Condition::positive(vec![f[i]]),
                GroundEffect::unconditional(vec![f[i + 1]], vec![f[i]]),
            ));
        }
        g.goal = Condition::positive(vec![f[3]]);
        g
    }

    #[test]
    fn chain_plan() {
        let g = chain();
        assert_eq!(relaxed_plan(&g, &g.initial_state()), RelaxedPlan::Plan(vec![0, 1, 2]));
    }

    #[test]
    fn goal_in_state_is_empty_plan() {
        let g = chain();
        let s = g.state_of(&[FactId(3)]);
        assert_eq!(relaxed_plan(&g, &s), RelaxedPlan::Plan(vec![]));
    }

    #[test]
    fn unsolvable() {
        let mut g = chain();
        g.actions.pop();
        assert_eq!(relaxed_plan(&g, &g.initial_state()), RelaxedPlan::Unsolvable);
    }

    #[test]
    fn second_effect_of_selected_action_keeps_its_condition() {
        let mut g = GroundTask::new("t", "d");
        let f: Vec<FactId> = ["c1", "c2", "g1", "g2"].iter().map(|n| g.facts.intern(GroundAtom::new(n, &[]))).collect();
        for i in 0..2 {
            g.actions.push(GroundAction::new(&format!("s{i}"), vec![], Condition::default(), GroundEffect::unconditional(vec![f[i]], vec![])));
        }
        let mut a = GroundAction::new("a", vec![], Condition::default(), GroundEffect::default());
        for i in 0..2 {
            let mut e = GroundEffect::unconditional(vec![f[i + 2]], vec![]);
            e.condition = Condition::positive(vec![f[i]]);
            a.effects.push(e);
        }
        g.actions.push(a);
        g.goal = Condition::positive(vec![f[2], f[3]]);
        assert_eq!(relaxed_plan(&g, &g.initial_state()), RelaxedPlan::Plan(vec![0, 1, 2]));
    }
}
