//! Execution semantics: formula evaluation, derived-predicate fixpoints and
//! action application.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    Formula, GroundAction, GroundAtom, GroundTask, ModelError, ObjectTable, State, EQUALITY,
};

/// Closed-world truth value of a ground formula in `state ∪ derived`.
pub fn evaluate_formula(
    state: &BTreeSet<GroundAtom>,
    derived: &BTreeSet<GroundAtom>,
    f: &Formula,
    objects: &ObjectTable,
) -> Result<bool, ModelError> {
    if let Some(v) = f.free_variables().into_iter().next() {
        return Err(ModelError::NonGround(v));
    }
    Ok(eval(state, derived, f, objects))
}

fn eval(
    state: &BTreeSet<GroundAtom>,
    derived: &BTreeSet<GroundAtom>,
    f: &Formula,
    objects: &ObjectTable,
) -> bool {
    match f {
        Formula::Atom(a) => {
            let g = a.to_ground().expect("closed formula has ground atoms");
            if g.predicate == EQUALITY {
                g.args[0] == g.args[1]
            } else {
                state.contains(&g) || derived.contains(&g)
            }
        }
        Formula::Not(g) => !eval(state, derived, g, objects),
        Formula::And(gs) => gs.iter().all(|g| eval(state, derived, g, objects)),
        Formula::Or(gs) => gs.iter().any(|g| eval(state, derived, g, objects)),
        Formula::Imply(a, b) => !eval(state, derived, a, objects) || eval(state, derived, b, objects),
        Formula::Forall(vars, body) | Formula::Exists(vars, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let (first, rest) = match vars.split_first() {
                Some(x) => x,
                None => return eval(state, derived, body, objects),
            };
            let inner = if rest.is_empty() {
                (**body).clone()
            } else if universal {
                Formula::Forall(rest.to_vec(), body.clone())
            } else {
                Formula::Exists(rest.to_vec(), body.clone())
            };
            let mut values = objects.objects_of(&first.ty).into_iter().map(|c| {
                let mut b = BTreeMap::new();
                b.insert(first.name.clone(), c);
                eval(state, derived, &inner.substitute(&b), objects)
            });
            if universal {
                values.all(|v| v)
            } else {
                values.any(|v| v)
            }
        }
    }
}

/// Order the derived predicates of a rule set into strata.
///
/// `edges` holds `(head, body predicate, negated)` triples. Every strongly
/// connected component of the head → body dependency graph becomes one stratum;
/// strata are returned dependencies first. A negated edge inside a component makes
/// the set unstratifiable.
pub fn stratify_predicates(
    edges: &[(String, String, bool)],
) -> Result<Vec<Vec<String>>, ModelError> {
    let nodes: BTreeSet<&str> = edges.iter().map(|(h, _, _)| h.as_str()).collect();
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for n in &nodes {
        succ.insert(n, BTreeSet::new());
    }
    for (h, b, _) in edges {
        if nodes.contains(b.as_str()) {
            succ.get_mut(h.as_str()).unwrap().insert(b.as_str());
        }
    }
    let sccs = tarjan(&nodes, &succ);
    let mut component: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, c) in sccs.iter().enumerate() {
        for n in c {
            component.insert(n, i);
        }
    }
    for (h, b, neg) in edges {
        if *neg {
            if let (Some(ch), Some(cb)) = (component.get(h.as_str()), component.get(b.as_str())) {
                if ch == cb {
                    return Err(ModelError::Unstratifiable(format!(
                        "{h} depends negatively on {b} within one recursive component"
                    )));
                }
            }
        }
    }
    Ok(sccs
        .into_iter()
        .map(|c| c.into_iter().map(str::to_string).collect())
        .collect())
}

fn tarjan<'a>(
    nodes: &BTreeSet<&'a str>,
    succ: &BTreeMap<&'a str, BTreeSet<&'a str>>,
) -> Vec<Vec<&'a str>> {
    struct St<'a> {
        index: BTreeMap<&'a str, usize>,
        low: BTreeMap<&'a str, usize>,
        on_stack: BTreeSet<&'a str>,
        stack: Vec<&'a str>,
        next: usize,
        out: Vec<Vec<&'a str>>,
    }
    fn visit<'a>(v: &'a str, succ: &BTreeMap<&'a str, BTreeSet<&'a str>>, st: &mut St<'a>) {
        st.index.insert(v, st.next);
        st.low.insert(v, st.next);
        st.next += 1;
        st.stack.push(v);
        st.on_stack.insert(v);
        for &w in &succ[v] {
            if !st.index.contains_key(w) {
                visit(w, succ, st);
                let lw = st.low[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(lw);
            } else if st.on_stack.contains(w) {
                let iw = st.index[w];
                let lv = st.low.get_mut(v).unwrap();
                *lv = (*lv).min(iw);
            }
        }
        if st.low[v] == st.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().unwrap();
                st.on_stack.remove(w);
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort();
            st.out.push(comp);
        }
    }
    let mut st = St {
        index: BTreeMap::new(),
        low: BTreeMap::new(),
        on_stack: BTreeSet::new(),
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for &n in nodes {
        if !st.index.contains_key(n) {
            visit(n, succ, &mut st);
        }
    }
    st.out
}

/// Rule indices of a ground task grouped into strata, dependencies first.
pub fn stratify(task: &GroundTask) -> Result<Vec<Vec<usize>>, ModelError> {
    let pred = |f: super::FactId| task.facts.atom(f).predicate.clone();
    let mut edges = Vec::new();
    for r in &task.rules {
        let h = pred(r.head);
        edges.push((h.clone(), h.clone(), false));
        for &b in &r.body.pos {
            edges.push((h.clone(), pred(b), false));
        }
        for &b in &r.body.neg {
            edges.push((h.clone(), pred(b), true));
        }
    }
    let strata = stratify_predicates(&edges)?;
    let mut level: BTreeMap<String, usize> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        for p in s {
            level.insert(p.clone(), i);
        }
    }
    let mut out = vec![Vec::new(); strata.len()];
    for (i, r) in task.rules.iter().enumerate() {
        out[level[&pred(r.head)]].push(i);
    }
    Ok(out)
}

/// Precomputed stratification for repeated fixpoint evaluation.
#[derive(Debug, Clone)]
pub struct DerivedEvaluator {
    rules: Vec<super::GroundRule>,
    strata: Vec<Vec<usize>>,
}

impl DerivedEvaluator {
    pub fn new(task: &GroundTask) -> Result<Self, ModelError> {
        Ok(DerivedEvaluator {
            rules: task.rules.clone(),
            strata: stratify(task)?,
        })
    }

    pub fn has_rules(&self) -> bool {
        !self.rules.is_empty()
    }

    /// `state` extended by the least fixpoint of every stratum in order.
    pub fn closure(&self, state: &State) -> State {
        let mut full = state.clone();
        for stratum in &self.strata {
            loop {
                let mut changed = false;
                for &ri in stratum {
                    let r = &self.rules[ri];
                    if !full.contains(r.head.index()) && r.body.holds(&full) {
                        full.insert(r.head.index());
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        full
    }

    /// Only the derived facts.
    pub fn extension(&self, state: &State) -> State {
        let mut ext = self.closure(state);
        ext.difference_with(state);
        ext
    }
}

/// Derived facts that hold in `state` under the task's rules.
pub fn compute_derived_extension(state: &State, task: &GroundTask) -> Result<State, ModelError> {
    Ok(DerivedEvaluator::new(task)?.extension(state))
}

/// Successor of `state` under `action`, with delete-before-add semantics.
pub fn apply_action(
    task: &GroundTask,
    state: &State,
    action: &GroundAction,
) -> Result<State, ModelError> {
    let eval = DerivedEvaluator::new(task)?;
    let full = eval.closure(state);
    if !action.precondition.holds(&full) {
        return Err(inapplicable(task, action, &full));
    }
    Ok(successor(action, state, &full))
}

pub(crate) fn inapplicable(task: &GroundTask, action: &GroundAction, full: &State) -> ModelError {
    let missing: Vec<String> = action
        .precondition
        .pos
        .iter()
        .filter(|f| !full.contains(f.index()))
        .map(|f| task.facts.atom(*f).to_string())
        .chain(
            action
                .precondition
                .neg
                .iter()
                .filter(|f| full.contains(f.index()))
                .map(|f| format!("(not {})", task.facts.atom(*f))),
        )
        .collect();
    ModelError::Inapplicable {
        action: action.signature(),
        reason: format!("unsatisfied {}", missing.join(" ")),
    }
}

/// Apply without checking the precondition. Effect conditions are read in
/// `full`, the pre-state including derived facts.
pub fn successor(action: &GroundAction, state: &State, full: &State) -> State {
    let mut next = state.clone();
    for e in &action.effects {
        if e.condition.holds(full) {
            for d in &e.dels {
                next.set(d.index(), false);
            }
        }
    }
    for e in &action.effects {
        if e.condition.holds(full) {
            for a in &e.adds {
                next.insert(a.index());
            }
        }
    }
    next
}

/// Convenience for tests: a ground atom from a `(p a b)` string.
pub fn parse_ground_atom(text: &str) -> Option<GroundAtom> {
    let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
    let mut parts = inner.split_whitespace();
    let predicate = parts.next()?.to_lowercase();
    Some(GroundAtom {
        predicate,
        args: parts.map(str::to_lowercase).collect(),
    })
}
