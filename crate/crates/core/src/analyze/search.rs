//! Breadth-first oracles over the full semantics, and plan validation.

use std::collections::{HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use crate::model::{DerivedEvaluator, GroundAction, GroundTask, ModelError, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Sequential,
    /// Steps are sets of pairwise non-interfering actions.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForce {
    /// Action indices per step.
    Plan(Vec<Vec<usize>>),
    Unsolvable,
    CapExceeded,
}

impl BruteForce {
    pub fn len(&self) -> Option<usize> {
        match self {
            BruteForce::Plan(p) => Some(p.len()),
            _ => None,
        }
    }
}

/// Successor under full semantics: fired effects are read in `full`, deletes go
/// first, then adds.
fn apply(a: &GroundAction, state: &State, full: &State) -> State {
    crate::model::successor(a, state, full)
}

/// Applicable actions in a basic state and its derived closure.
pub fn applicable(g: &GroundTask, eval: &DerivedEvaluator, state: &State) -> (State, Vec<usize>) {
    let full = eval.closure(state);
    let acts = g
        .actions
        .iter()
        .enumerate()
        .filter(|(_, a)| a.precondition.holds(&full))
        .map(|(i, _)| i)
        .collect();
    (full, acts)
}

/// What an action reads and writes. `strict` holds facts whose value must not
/// change under the action at all: negative preconditions, effect conditions and
/// the basic facts behind derived preconditions.
struct Footprint {
    pre: FixedBitSet,
    strict: FixedBitSet,
    adds: FixedBitSet,
    dels: FixedBitSet,
}

/// Facts each derived fact transitively depends on.
fn derived_cones(g: &GroundTask) -> HashMap<usize, FixedBitSet> {
    let n = g.facts.len();
    let mut cone: HashMap<usize, FixedBitSet> = HashMap::new();
    for r in &g.rules {
        let c = cone.entry(r.head.index()).or_insert_with(|| FixedBitSet::with_capacity(n));
        r.body.facts().for_each(|f| c.insert(f.index()));
    }
    loop {
        let mut changed = false;
        let heads: Vec<usize> = cone.keys().copied().collect();
        for h in heads {
            let mut c = cone[&h].clone();
            for f in cone[&h].ones() {
                if let Some(sub) = cone.get(&f) {
                    c.union_with(sub);
                }
            }
            if c != cone[&h] {
                cone.insert(h, c);
                changed = true;
            }
        }
        if !changed {
            return cone;
        }
    }
}

fn footprint(g: &GroundTask, a: &GroundAction, cones: &HashMap<usize, FixedBitSet>) -> Footprint {
    let n = g.facts.len();
    let mut fp = Footprint {
        pre: FixedBitSet::with_capacity(n),
        strict: FixedBitSet::with_capacity(n),
        adds: FixedBitSet::with_capacity(n),
        dels: FixedBitSet::with_capacity(n),
    };
    a.precondition.pos.iter().for_each(|f| fp.pre.insert(f.index()));
    a.precondition.neg.iter().for_each(|f| fp.strict.insert(f.index()));
    for e in &a.effects {
        e.condition.facts().for_each(|f| fp.strict.insert(f.index()));
        e.adds.iter().for_each(|f| fp.adds.insert(f.index()));
        e.dels.iter().for_each(|f| fp.dels.insert(f.index()));
    }
    for f in a.precondition.facts().chain(a.effects.iter().flat_map(|e| e.condition.facts())) {
        if let Some(c) = cones.get(&f.index()) {
            fp.strict.union_with(c);
        }
    }
    fp
}

/// Graphplan interference, extended to negative and derived reads.
fn interfere(x: &Footprint, y: &Footprint) -> bool {
    let one_way = |x: &Footprint, y: &Footprint| {
        !x.dels.is_disjoint(&y.pre)
            || !x.dels.is_disjoint(&y.adds)
            || !x.dels.is_disjoint(&y.strict)
            || !x.adds.is_disjoint(&y.strict)
    };
    one_way(x, y) || one_way(y, x)
}

fn independent_sets(acts: &[usize], conflict: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(i: usize, acts: &[usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, conflict: &dyn Fn(usize, usize) -> bool) {
        if i == acts.len() {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        rec(i + 1, acts, cur, out, conflict);
        if cur.iter().all(|&c| !conflict(c, acts[i])) {
            cur.push(acts[i]);
            rec(i + 1, acts, cur, out, conflict);
            cur.pop();
        }
    }
    rec(0, acts, &mut Vec::new(), &mut out, conflict);
    out
}

/// Shortest plan by breadth-first search from the initial state. `cap` bounds the
/// number of distinct states visited.
pub fn brute_force_plan(g: &GroundTask, mode: SearchMode, cap: usize) -> Result<BruteForce, ModelError> {
    brute_force_plan_from(g, &g.initial_state(), mode, cap)
}

/// As [`brute_force_plan`], starting from `start`.
pub fn brute_force_plan_from(
    g: &GroundTask,
    start: &State,
    mode: SearchMode,
    cap: usize,
) -> Result<BruteForce, ModelError> {
    let eval = DerivedEvaluator::new(g)?;
    let prints: Vec<Footprint> = match mode {
        SearchMode::Parallel => {
            let cones = derived_cones(g);
            g.actions.iter().map(|a| footprint(g, a, &cones)).collect()
        }
        SearchMode::Sequential => Vec::new(),
    };
    let mut parent: HashMap<State, Option<(State, Vec<usize>)>> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert(start.clone(), None);
    queue.push_back(start.clone());
    while let Some(s) = queue.pop_front() {
        let (full, acts) = applicable(g, &eval, &s);
        if g.goal.holds(&full) {
            let mut plan = Vec::new();
            let mut cur = s;
            while let Some(Some((p, step))) = parent.get(&cur) {
                plan.push(step.clone());
                cur = p.clone();
            }
            plan.reverse();
            return Ok(BruteForce::Plan(plan));
        }
        let steps: Vec<Vec<usize>> = match mode {
            SearchMode::Sequential => acts.iter().map(|&a| vec![a]).collect(),
            SearchMode::Parallel => independent_sets(&acts, &|x, y| interfere(&prints[x], &prints[y])),
        };
        for step in steps {
            let mut next = s.clone();
            for &a in &step {
                next = apply(&g.actions[a], &next, &full);
            }
            if !parent.contains_key(&next) {
                if parent.len() >= cap {
                    return Ok(BruteForce::CapExceeded);
                }
                parent.insert(next.clone(), Some((s.clone(), step)));
                queue.push_back(next);
            }
        }
    }
    Ok(BruteForce::Unsolvable)
}

/// Every basic state reachable from the initial state, in breadth-first order, or
/// `None` if there are more than `cap`.
pub fn reachable_states(g: &GroundTask, cap: usize) -> Result<Option<Vec<State>>, ModelError> {
    let eval = DerivedEvaluator::new(g)?;
    let mut seen: HashMap<State, usize> = HashMap::new();
    let mut order = vec![g.initial_state()];
    seen.insert(order[0].clone(), 0);
    let mut i = 0;
    while i < order.len() {
        let s = order[i].clone();
        let (full, acts) = applicable(g, &eval, &s);
        for a in acts {
            let t = apply(&g.actions[a], &s, &full);
            if !seen.contains_key(&t) {
                if order.len() >= cap {
                    return Ok(None);
                }
                seen.insert(t.clone(), order.len());
                order.push(t);
            }
        }
        i += 1;
    }
    Ok(Some(order))
}

/// Why a plan failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    UnknownAction,
    /// Precondition literals that do not hold, rendered as atoms (`(not ..)` for negated ones).
    Inapplicable(Vec<String>),
    GoalNotReached(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanViolation {
    /// 0-based step index; equals the plan length for goal failures.
    pub step: usize,
    pub action: String,
    pub kind: ViolationKind,
}

impl std::fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ViolationKind::UnknownAction => write!(f, "step {}: unknown action {}", self.step, self.action),
            ViolationKind::Inapplicable(m) => {
                write!(f, "step {}: {} is not applicable, unsatisfied: {}", self.step, self.action, m.join(" "))
            }
            ViolationKind::GoalNotReached(m) => write!(f, "goal not reached, unsatisfied: {}", m.join(" ")),
        }
    }
}

fn unsatisfied(g: &GroundTask, c: &crate::model::Condition, full: &State) -> Vec<String> {
    let mut out: Vec<String> =
        c.pos.iter().filter(|f| !full.contains(f.index())).map(|&f| g.facts.atom(f).to_string()).collect();
    out.extend(
        c.neg.iter().filter(|f| full.contains(f.index())).map(|&f| format!("(not {})", g.facts.atom(f))),
    );
    out
}

/// Replay a sequential plan, given as action signatures, with full semantics.
pub fn validate_plan(g: &GroundTask, plan: &[String]) -> Result<(), PlanViolation> {
    let eval = DerivedEvaluator::new(g).map_err(|e| PlanViolation {
        step: 0,
        action: String::new(),
        kind: ViolationKind::Inapplicable(vec![e.to_string()]),
    })?;
    let index = g.action_index();
    let mut s = g.initial_state();
    for (step, sig) in plan.iter().enumerate() {
        let sig = normalize_signature(sig);
        let Some(&ai) = index.get(&sig) else {
            return Err(PlanViolation { step, action: sig, kind: ViolationKind::UnknownAction });
        };
        let a = &g.actions[ai];
        let full = eval.closure(&s);
        if !a.precondition.holds(&full) {
            return Err(PlanViolation {
                step,
                action: sig,
                kind: ViolationKind::Inapplicable(unsatisfied(g, &a.precondition, &full)),
            });
        }
        s = apply(a, &s, &full);
    }
    let full = eval.closure(&s);
    if !g.goal.holds(&full) {
        return Err(PlanViolation {
            step: plan.len(),
            action: String::new(),
            kind: ViolationKind::GoalNotReached(unsatisfied(g, &g.goal, &full)),
        });
    }
    Ok(())
}

/// Lowercased signature with single spaces, e.g. `(move a b)`.
pub fn normalize_signature(s: &str) -> String {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    format!("({})", inner.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
}

/// Signatures of the source-task actions a compiled plan stands for: bookkeeping
/// actions are dropped, the rest are mapped to their origin.
pub fn erase_bookkeeping(compiled: &GroundTask, plan: &[usize]) -> Vec<String> {
    plan.iter()
        .map(|&i| &compiled.actions[i])
        .filter(|a| !a.bookkeeping)
        .map(|a| a.origin.clone().unwrap_or_else(|| a.signature()))
        .collect()
}

/// Signatures of a plan given as action indices.
pub fn signatures(g: &GroundTask, plan: &[usize]) -> Vec<String> {
    plan.iter().map(|&i| g.actions[i].signature()).collect()
}

/// Flatten a parallel plan into a sequence.
pub fn sequentialize(plan: &[Vec<usize>]) -> Vec<usize> {
    plan.iter().flatten().copied().collect()
}
