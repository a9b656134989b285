//! Exact length of an optimal delete-free plan.
//!
//! Every plan of the delete relaxation contains an action from each disjunctive
//! action landmark, so a minimum hitting set of any landmark collection bounds h⁺
//! from below. Landmarks are added until a minimum hitting set is itself a relaxed
//! plan. Minimum hitting sets are found by iterative deepening on their size.

use fixedbitset::FixedBitSet;
use serde::{Serialize, Serializer};

use super::AnalyzeError;
use crate::model::{GroundTask, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HPlus {
    Value(usize),
    Unreachable,
    CapExceeded,
}

impl Serialize for HPlus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            HPlus::Value(v) => s.serialize_u64(*v as u64),
            HPlus::Unreachable => s.serialize_str("unreachable"),
            HPlus::CapExceeded => s.serialize_str("cap-exceeded"),
        }
    }
}

struct Relaxed<'a> {
    g: &'a GroundTask,
    init: FixedBitSet,
    goal: Vec<usize>,
}

impl Relaxed<'_> {
    /// Facts reachable from the state using only the actions in `h` and the rules.
    fn reach(&self, h: &FixedBitSet) -> FixedBitSet {
        let mut r = self.init.clone();
        loop {
            let mut changed = false;
            for ai in h.ones() {
                let a = &self.g.actions[ai];
                if a.precondition.pos.iter().all(|f| r.contains(f.index())) {
                    for f in &a.effects[0].adds {
                        if !r.put(f.index()) {
                            changed = true;
                        }
                    }
                }
            }
            for rule in &self.g.rules {
                if !r.contains(rule.head.index()) && rule.body.pos.iter().all(|f| r.contains(f.index())) {
                    r.insert(rule.head.index());
                    changed = true;
                }
            }
            if !changed {
                return r;
            }
        }
    }

    fn solves(&self, r: &FixedBitSet) -> bool {
        self.goal.iter().all(|&f| r.contains(f))
    }
}

/// Whether some set of at most `k` actions, extending `chosen` and avoiding
/// `forbidden`, hits every landmark; on success `chosen` holds it. Branches on
/// the open landmark with the fewest candidates and prunes with a greedy packing
/// of pairwise disjoint open landmarks.
fn hitting_set(
    landmarks: &[FixedBitSet],
    k: usize,
    chosen: &mut FixedBitSet,
    forbidden: &mut FixedBitSet,
) -> bool {
    let mut open: Vec<FixedBitSet> = Vec::new();
    for l in landmarks {
        if l.is_disjoint(chosen) {
            let mut c = l.clone();
            c.difference_with(forbidden);
            if c.is_clear() {
                return false;
            }
            open.push(c);
        }
    }
    if open.is_empty() {
        return true;
    }
    if k == 0 {
        return false;
    }
    open.sort_by_key(|c| c.count_ones(..));
    let mut used = FixedBitSet::with_capacity(chosen.len());
    let mut disjoint = 0;
    for c in &open {
        if c.is_disjoint(&used) {
            disjoint += 1;
            used.union_with(c);
        }
    }
    if disjoint > k {
        return false;
    }
    let mut added = Vec::new();
    let mut found = false;
    for a in open[0].ones() {
        chosen.insert(a);
        if hitting_set(landmarks, k - 1, chosen, forbidden) {
            found = true;
            break;
        }
        chosen.set(a, false);
        // Later branches never use `a`: those sets were covered here.
        forbidden.insert(a);
        added.push(a);
    }
    for a in added {
        forbidden.set(a, false);
    }
    found
}

/// Exact h⁺ of `state`, or [`HPlus::CapExceeded`] when it is larger than `cap`.
/// Rules are free; negative conditions and deletes are ignored. Conditional
/// effects are not supported.
pub fn h_plus_oracle(g: &GroundTask, state: &State, cap: usize) -> Result<HPlus, AnalyzeError> {
    if g.actions.iter().any(|a| a.conditional_effect_count() > 0) {
        return Err(AnalyzeError::NotStrips("h+ needs actions without conditional effects".into()));
    }
    let m = g.actions.len();
    let mut init = FixedBitSet::with_capacity(g.facts.len());
    init.union_with(state);
    init.grow(g.facts.len());
    let rx = Relaxed { g, init, goal: g.goal.pos.iter().map(|f| f.index()).collect() };
    let mut all = FixedBitSet::with_capacity(m);
    all.insert_range(..);
    if !rx.solves(&rx.reach(&all)) {
        return Ok(HPlus::Unreachable);
    }
    let mut landmarks: Vec<FixedBitSet> = Vec::new();
    let mut k = 0;
    loop {
        let h = loop {
            if k > cap {
                return Ok(HPlus::CapExceeded);
            }
            let mut chosen = FixedBitSet::with_capacity(m);
            let mut forbidden = FixedBitSet::with_capacity(m);
            if hitting_set(&landmarks, k, &mut chosen, &mut forbidden) {
                break chosen;
            }
            k += 1;
        };
        if rx.solves(&rx.reach(&h)) {
            return Ok(HPlus::Value(h.count_ones(..)));
        }
        // Grow h to a maximal action set that still fails; every relaxed plan
        // needs one of the actions that would extend its reachable facts.
        let mut ext = h;
        for a in 0..m {
            if ext.contains(a) {
                continue;
            }
            ext.insert(a);
            if rx.solves(&rx.reach(&ext)) {
                ext.set(a, false);
            }
        }
        let r = rx.reach(&ext);
        let mut landmark = FixedBitSet::with_capacity(m);
        landmark.extend((0..m).filter(|&a| {
            let act = &g.actions[a];
            !ext.contains(a)
                && act.precondition.pos.iter().all(|f| r.contains(f.index()))
                && act.effects[0].adds.iter().any(|f| !r.contains(f.index()))
        }));
        debug_assert!(!landmark.is_clear());
        landmarks.push(landmark);
    }
}
