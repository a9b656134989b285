use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Atom, LiftedTask, Term, EQUALITY};

/// Predicates whose extension is fixed by the initial state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaticInfo {
    pub static_predicates: BTreeSet<String>,
    /// Initial extension of every static predicate.
    pub extension: BTreeMap<String, BTreeSet<Vec<String>>>,
}

impl StaticInfo {
    pub fn is_static(&self, predicate: &str) -> bool {
        predicate == EQUALITY || self.static_predicates.contains(predicate)
    }

    /// Truth value of a static atom whose arguments are bound, `None` otherwise.
    pub fn evaluate(&self, a: &Atom) -> Option<bool> {
        if a.is_equality() {
            return match (&a.args[0], &a.args[1]) {
                (Term::Const(x), Term::Const(y)) => Some(x == y),
                (Term::Var(x), Term::Var(y)) if x == y => Some(true),
                _ => None,
            };
        }
        if !self.static_predicates.contains(&a.predicate) {
            return None;
        }
        let g = a.to_ground()?;
        Some(
            self.extension
                .get(&a.predicate)
                .map(|e| e.contains(&g.args))
                .unwrap_or(false),
        )
    }
}

/// Predicates that occur in no effect and are neither derived nor changed by a
/// timed initial literal. `=` is always static.
pub fn detect_statics(t: &LiftedTask) -> StaticInfo {
    let mut affected: BTreeSet<&str> = BTreeSet::new();
    for op in &t.operators {
        for e in op.all_effects() {
            for a in e.adds.iter().chain(&e.deletes) {
                affected.insert(&a.predicate);
            }
        }
    }
    for r in &t.derivation_rules {
        affected.insert(&r.head.predicate);
    }
    for tl in &t.timed_literals {
        affected.insert(&tl.atom.predicate);
    }
    let mut info = StaticInfo::default();
    for p in t.predicates.keys() {
        if !affected.contains(p.as_str()) {
            info.static_predicates.insert(p.clone());
            info.extension.insert(p.clone(), BTreeSet::new());
        }
    }
    info.static_predicates.insert(EQUALITY.to_string());
    for a in &t.init {
        if let Some(e) = info.extension.get_mut(&a.predicate) {
            e.insert(a.args.clone());
        }
    }
    info
}
