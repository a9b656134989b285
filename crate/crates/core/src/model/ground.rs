//! Ground tasks over an interned fact universe.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use super::{GroundAtom, Rational};

/// A world state: the set of true basic facts, indexed by [`FactId`].
pub type State = FixedBitSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactId(pub u32);

impl FactId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Interned ground atoms.
#[derive(Debug, Clone, Default)]
pub struct FactTable {
    atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, FactId>,
}

impl PartialEq for FactTable {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

impl Eq for FactTable {}

impl FactTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, atom: GroundAtom) -> FactId {
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = FactId(self.atoms.len() as u32);
        self.index.insert(atom.clone(), id);
        self.atoms.push(atom);
        id
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<FactId> {
        self.index.get(atom).copied()
    }

    pub fn atom(&self, id: FactId) -> &GroundAtom {
        &self.atoms[id.index()]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, &GroundAtom)> {
        self.atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (FactId(i as u32), a))
    }
}

/// Conjunction of positive and negative fact literals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Condition {
    pub pos: Vec<FactId>,
    pub neg: Vec<FactId>,
}

impl Condition {
    pub fn new(mut pos: Vec<FactId>, mut neg: Vec<FactId>) -> Self {
        pos.sort();
        pos.dedup();
        neg.sort();
        neg.dedup();
        Condition { pos, neg }
    }

    pub fn positive(pos: Vec<FactId>) -> Self {
        Self::new(pos, Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }

    /// True when some fact occurs both positively and negatively.
    pub fn is_contradictory(&self) -> bool {
        self.pos.iter().any(|p| self.neg.binary_search(p).is_ok())
    }

    pub fn holds(&self, full_state: &State) -> bool {
        self.pos.iter().all(|f| full_state.contains(f.index()))
            && !self.neg.iter().any(|f| full_state.contains(f.index()))
    }

    pub fn conjoin(&self, other: &Condition) -> Condition {
        let mut pos = self.pos.clone();
        pos.extend(&other.pos);
        let mut neg = self.neg.clone();
        neg.extend(&other.neg);
        Condition::new(pos, neg)
    }

    pub fn facts(&self) -> impl Iterator<Item = FactId> + '_ {
        self.pos.iter().chain(&self.neg).copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct GroundEffect {
    pub condition: Condition,
    pub adds: Vec<FactId>,
    pub dels: Vec<FactId>,
}

impl GroundEffect {
    pub fn unconditional(mut adds: Vec<FactId>, mut dels: Vec<FactId>) -> Self {
        adds.sort();
        adds.dedup();
        dels.sort();
        dels.dedup();
        GroundEffect {
            condition: Condition::default(),
            adds,
            dels,
        }
    }

    pub fn normalize(&mut self) {
        self.adds.sort();
        self.adds.dedup();
        self.dels.sort();
        self.dels.dedup();
    }
}

/// A ground action. `effects[0]` is the unconditional effect; further entries are
/// conditional.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundAction {
    pub op: String,
    pub args: Vec<String>,
    pub precondition: Condition,
    pub effects: Vec<GroundEffect>,
    pub duration: Option<Rational>,
    /// Signature of the action of the source task this one was compiled from.
    pub origin: Option<String>,
    /// Compilation artifact, erased when comparing plans against the source task.
    pub bookkeeping: bool,
}

impl GroundAction {
    pub fn new(op: &str, args: Vec<String>, precondition: Condition, effect: GroundEffect) -> Self {
        GroundAction {
            op: op.to_string(),
            args,
            precondition,
            effects: vec![effect],
            duration: None,
            origin: None,
            bookkeeping: false,
        }
    }

    /// `(op a1 a2)`, the form used in plan files.
    pub fn signature(&self) -> String {
        let mut s = format!("({}", self.op);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }

    /// `op-a1-a2`, the form used when the action is printed as a parameterless operator.
    pub fn flat_name(&self) -> String {
        let mut s = self.op.clone();
        for a in &self.args {
            s.push('-');
            s.push_str(a);
        }
        s
    }

    pub fn conditional_effects(&self) -> impl Iterator<Item = &GroundEffect> {
        self.effects.iter().filter(|e| !e.condition.is_empty())
    }

    pub fn conditional_effect_count(&self) -> usize {
        self.conditional_effects().count()
    }

    pub fn is_strips(&self) -> bool {
        self.precondition.neg.is_empty()
            && self.effects.len() == 1
            && self.effects[0].condition.is_empty()
    }

    pub fn all_adds(&self) -> impl Iterator<Item = FactId> + '_ {
        self.effects.iter().flat_map(|e| e.adds.iter().copied())
    }

    pub fn all_dels(&self) -> impl Iterator<Item = FactId> + '_ {
        self.effects.iter().flat_map(|e| e.dels.iter().copied())
    }

    /// Merge every empty-condition effect into `effects[0]`.
    pub fn normalize_effects(&mut self) {
        let mut base = GroundEffect::default();
        let mut rest = Vec::new();
        for e in self.effects.drain(..) {
            if e.condition.is_empty() {
                base.adds.extend(e.adds);
                base.dels.extend(e.dels);
            } else {
                rest.push(e);
            }
        }
        base.normalize();
        for e in &mut rest {
            e.normalize();
        }
        self.effects.push(base);
        self.effects.extend(rest);
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signature())
    }
}

/// `body => head` over facts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundRule {
    pub head: FactId,
    pub body: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTask {
    pub name: String,
    pub domain_name: String,
    pub facts: FactTable,
    pub actions: Vec<GroundAction>,
    pub rules: Vec<GroundRule>,
    pub init: Vec<FactId>,
    pub goal: Condition,
    pub static_facts: Vec<FactId>,
    pub bookkeeping_facts: BTreeSet<FactId>,
}

impl GroundTask {
    pub fn new(name: &str, domain_name: &str) -> Self {
        GroundTask {
            name: name.to_string(),
            domain_name: domain_name.to_string(),
            facts: FactTable::new(),
            actions: Vec::new(),
            rules: Vec::new(),
            init: Vec::new(),
            goal: Condition::default(),
            static_facts: Vec::new(),
            bookkeeping_facts: BTreeSet::new(),
        }
    }

    pub fn fact(&self, predicate: &str, args: &[&str]) -> Option<FactId> {
        self.facts.get(&GroundAtom::new(predicate, args))
    }

    pub fn empty_state(&self) -> State {
        FixedBitSet::with_capacity(self.facts.len())
    }

    pub fn initial_state(&self) -> State {
        self.state_of(&self.init)
    }

    pub fn state_of(&self, facts: &[FactId]) -> State {
        let mut s = self.empty_state();
        for f in facts {
            s.insert(f.index());
        }
        s
    }

    /// Heads of derivation rules.
    pub fn derived_facts(&self) -> BTreeSet<FactId> {
        self.rules.iter().map(|r| r.head).collect()
    }

    pub fn derived_predicates(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .map(|r| self.facts.atom(r.head).predicate.clone())
            .collect()
    }

    /// Pure STRIPS: no rules, positive conditions, one unconditional effect per action.
    pub fn is_strips(&self) -> bool {
        self.rules.is_empty() && self.goal.neg.is_empty() && self.actions.iter().all(|a| a.is_strips())
    }

    pub fn action_index(&self) -> HashMap<String, usize> {
        self.actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.signature(), i))
            .collect()
    }

    pub fn describe_facts(&self, facts: impl IntoIterator<Item = FactId>) -> Vec<String> {
        facts
            .into_iter()
            .map(|f| self.facts.atom(f).to_string())
            .collect()
    }

    /// Intern a fresh 0-ary or n-ary fact, refusing names that already exist.
    pub fn add_fresh_fact(&mut self, atom: GroundAtom) -> Option<FactId> {
        if self.facts.get(&atom).is_some() {
            return None;
        }
        Some(self.facts.intern(atom))
    }

    /// Drop every fact for which `keep` is false and renumber the rest. References
    /// to dropped facts are removed from all lists; callers ensure this is sound.
    pub fn retain_facts(&self, keep: &FixedBitSet) -> GroundTask {
        let mut map: Vec<Option<FactId>> = vec![None; self.facts.len()];
        let mut facts = FactTable::new();
        for (id, atom) in self.facts.iter() {
            if keep.contains(id.index()) {
                map[id.index()] = Some(facts.intern(atom.clone()));
            }
        }
        let remap = |v: &[FactId]| -> Vec<FactId> {
            let mut out: Vec<FactId> = v.iter().filter_map(|f| map[f.index()]).collect();
            out.sort();
            out
        };
        let remap_cond = |c: &Condition| Condition {
            pos: remap(&c.pos),
            neg: remap(&c.neg),
        };
        let actions = self
            .actions
            .iter()
            .map(|a| GroundAction {
                precondition: remap_cond(&a.precondition),
                effects: a
                    .effects
                    .iter()
                    .map(|e| GroundEffect {
                        condition: remap_cond(&e.condition),
                        adds: remap(&e.adds),
                        dels: remap(&e.dels),
                    })
                    .collect(),
                ..a.clone()
            })
            .collect();
        let rules = self
            .rules
            .iter()
            .filter_map(|r| {
                map[r.head.index()].map(|head| GroundRule {
                    head,
                    body: remap_cond(&r.body),
                })
            })
            .collect();
        GroundTask {
            name: self.name.clone(),
            domain_name: self.domain_name.clone(),
            facts,
            actions,
            rules,
            init: remap(&self.init),
            goal: remap_cond(&self.goal),
            static_facts: remap(&self.static_facts),
            bookkeeping_facts: self
                .bookkeeping_facts
                .iter()
                .filter_map(|f| map[f.index()])
                .collect(),
        }
    }

    /// Delete relaxation: delete lists emptied and negative conditions dropped.
    pub fn delete_relaxation(&self) -> GroundTask {
        let relax = |c: &Condition| Condition::new(c.pos.clone(), Vec::new());
        let mut out = self.clone();
        for a in &mut out.actions {
            a.precondition = relax(&a.precondition);
            for e in &mut a.effects {
                e.condition = relax(&e.condition);
                e.dels.clear();
            }
        }
        for r in &mut out.rules {
            r.body = relax(&r.body);
        }
        out.goal = relax(&out.goal);
        out
    }
}
