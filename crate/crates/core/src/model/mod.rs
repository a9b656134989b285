//! Lifted and ground task representations.
//!
//! A [`LiftedTask`] is the typed domain + problem pair as written in PDDL.
//! Grounding turns it into a [`GroundTask`] whose facts are interned to dense
//! indices. Execution semantics for both levels live in [`semantics`].

pub mod ground;
pub mod rational;
pub mod semantics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use ground::{
    Condition, FactId, FactTable, GroundAction, GroundEffect, GroundRule, GroundTask, State,
};
pub use rational::Rational;
pub use semantics::{
    apply_action, compute_derived_extension, evaluate_formula, parse_ground_atom, stratify, stratify_predicates,
    successor, DerivedEvaluator,
};

/// Root of every type hierarchy.
pub const OBJECT_TYPE: &str = "object";
/// Built-in equality predicate.
pub const EQUALITY: &str = "=";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("formula is not ground: free variable ?{0}")]
    NonGround(String),
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("predicate '{predicate}' expects {expected} arguments, got {found}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("variable ?{variable} is not bound in {context}")]
    UnboundVariable { variable: String, context: String },
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("unknown type '{0}'")]
    UnknownType(String),
    #[error("derived predicate '{predicate}' is affected by an effect of '{operator}'")]
    DerivedInEffect { predicate: String, operator: String },
    #[error("equality appears in an effect of '{0}'")]
    EqualityInEffect(String),
    #[error("action {action} is not applicable: {reason}")]
    Inapplicable { action: String, reason: String },
    #[error("rule set is not stratifiable: {0}")]
    Unstratifiable(String),
    #[error("contradictory timed literals on {atom} at time {time}")]
    ContradictoryTimedLiterals { atom: String, time: String },
    #[error("timed literal on {atom} at non-positive time {time}")]
    NonPositiveTimedLiteral { atom: String, time: String },
}

/// Argument of an atom: a variable (stored without the leading `?`) or a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }

    fn substitute(&self, binding: &Binding) -> Term {
        match self {
            Term::Var(v) => match binding.get(v) {
                Some(c) => Term::Const(c.clone()),
                None => self.clone(),
            },
            Term::Const(_) => self.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Variable → constant assignment.
pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.to_string(),
            args,
        }
    }

    pub fn is_equality(&self) -> bool {
        self.predicate == EQUALITY
    }

    pub fn substitute(&self, binding: &Binding) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.substitute(binding)).collect(),
        }
    }

    pub fn to_ground(&self) -> Option<GroundAtom> {
        let args = self
            .args
            .iter()
            .map(|t| t.as_const().map(str::to_string))
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom {
            predicate: self.predicate.clone(),
            args,
        })
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A variable-free atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        GroundAtom {
            predicate: predicate.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn to_atom(&self) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| Term::Const(a.clone())).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedVar {
    pub name: String,
    pub ty: String,
}

impl TypedVar {
    pub fn new(name: &str, ty: &str) -> Self {
        TypedVar {
            name: name.to_string(),
            ty: ty.to_string(),
        }
    }
}

/// First-order formula over atoms. `And(vec![])` is TRUE and `Or(vec![])` is FALSE.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Imply(Box<Formula>, Box<Formula>),
    Forall(Vec<TypedVar>, Box<Formula>),
    Exists(Vec<TypedVar>, Box<Formula>),
}

impl Formula {
    pub fn truth() -> Self {
        Formula::And(Vec::new())
    }

    pub fn falsity() -> Self {
        Formula::Or(Vec::new())
    }

    pub fn atom(predicate: &str, args: Vec<Term>) -> Self {
        Formula::Atom(Atom::new(predicate, args))
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::And(v) if v.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::Or(v) if v.is_empty())
    }

    /// Variables not bound by a quantifier inside the formula.
    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(a) => {
                for v in a.variables() {
                    if !bound.iter().any(|b| b == v) {
                        out.insert(v.to_string());
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Formula::Imply(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Forall(vars, f) | Formula::Exists(vars, f) => {
                let n = bound.len();
                bound.extend(vars.iter().map(|v| v.name.clone()));
                f.collect_free(bound, out);
                bound.truncate(n);
            }
        }
    }

    /// Replace free occurrences of bound variables by constants.
    pub fn substitute(&self, binding: &Binding) -> Formula {
        if binding.is_empty() {
            return self.clone();
        }
        match self {
            Formula::Atom(a) => Formula::Atom(a.substitute(binding)),
            Formula::Not(f) => Formula::not(f.substitute(binding)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(binding)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute(binding)).collect()),
            Formula::Imply(a, b) => Formula::Imply(
                Box::new(a.substitute(binding)),
                Box::new(b.substitute(binding)),
            ),
            Formula::Forall(vars, f) | Formula::Exists(vars, f) => {
                let mut inner = binding.clone();
                for v in vars {
                    inner.remove(&v.name);
                }
                let body = Box::new(f.substitute(&inner));
                match self {
                    Formula::Forall(..) => Formula::Forall(vars.clone(), body),
                    _ => Formula::Exists(vars.clone(), body),
                }
            }
        }
    }

    /// Visit every atom together with its polarity (true = positive) in NNF reading.
    /// Implications count their antecedent as negated.
    pub fn visit_literals(&self, f: &mut impl FnMut(&Atom, bool)) {
        self.visit_literals_inner(true, f)
    }

    fn visit_literals_inner(&self, positive: bool, f: &mut impl FnMut(&Atom, bool)) {
        match self {
            Formula::Atom(a) => f(a, positive),
            Formula::Not(inner) => inner.visit_literals_inner(!positive, f),
            Formula::And(fs) | Formula::Or(fs) => {
                for g in fs {
                    g.visit_literals_inner(positive, f);
                }
            }
            Formula::Imply(a, b) => {
                a.visit_literals_inner(!positive, f);
                b.visit_literals_inner(positive, f);
            }
            Formula::Forall(_, g) | Formula::Exists(_, g) => g.visit_literals_inner(positive, f),
        }
    }

    pub fn predicates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_literals(&mut |a, _| {
            out.insert(a.predicate.clone());
        });
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn vars(f: &mut fmt::Formatter<'_>, vs: &[TypedVar]) -> fmt::Result {
            write!(f, "(")?;
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "?{} - {}", v.name, v.ty)?;
            }
            write!(f, ")")
        }
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) | Formula::Or(gs) => {
                let kw = if matches!(self, Formula::And(_)) { "and" } else { "or" };
                write!(f, "({kw}")?;
                for g in gs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Imply(a, b) => write!(f, "(imply {a} {b})"),
            Formula::Forall(vs, g) => {
                write!(f, "(forall ")?;
                vars(f, vs)?;
                write!(f, " {g})")
            }
            Formula::Exists(vs, g) => {
                write!(f, "(exists ")?;
                vars(f, vs)?;
                write!(f, " {g})")
            }
        }
    }
}

/// `forall params: when condition then adds/deletes`. Unconditional effects have
/// no params and condition TRUE.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionalEffect {
    pub params: Vec<TypedVar>,
    pub condition: Formula,
    pub adds: Vec<Atom>,
    pub deletes: Vec<Atom>,
}

impl ConditionalEffect {
    pub fn unconditional(adds: Vec<Atom>, deletes: Vec<Atom>) -> Self {
        ConditionalEffect {
            params: Vec::new(),
            condition: Formula::truth(),
            adds,
            deletes,
        }
    }

    pub fn is_unconditional(&self) -> bool {
        self.params.is_empty() && self.condition.is_true()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DurationExpr {
    Const(Rational),
    /// Lookup of a static numeric function, e.g. `(fly-time ?from ?to)`.
    Function(Atom),
}

/// Temporal parts of a durative operator. The operator's `precondition` is the
/// `at start` condition and its `effects` are the `at end` effects.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Durative {
    pub duration: DurationExpr,
    pub over_all: Formula,
    pub at_end: Formula,
    pub start_effects: Vec<ConditionalEffect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operator {
    pub name: String,
    pub parameters: Vec<TypedVar>,
    pub precondition: Formula,
    pub effects: Vec<ConditionalEffect>,
    pub durative: Option<Durative>,
}

impl Operator {
    pub fn new(name: &str, parameters: Vec<TypedVar>, precondition: Formula) -> Self {
        Operator {
            name: name.to_string(),
            parameters,
            precondition,
            effects: Vec::new(),
            durative: None,
        }
    }

    /// All effects, start effects first for durative operators.
    pub fn all_effects(&self) -> impl Iterator<Item = &ConditionalEffect> {
        self.durative
            .iter()
            .flat_map(|d| d.start_effects.iter())
            .chain(self.effects.iter())
    }

    /// Merge every unconditional entry into a single leading one.
    pub fn normalize_effects(&mut self) {
        merge_unconditional(&mut self.effects);
        if let Some(d) = &mut self.durative {
            merge_unconditional(&mut d.start_effects);
        }
    }
}

pub(crate) fn merge_unconditional(effects: &mut Vec<ConditionalEffect>) {
    if effects.iter().filter(|e| e.is_unconditional()).count() == 0 {
        return;
    }
    let mut base = ConditionalEffect::unconditional(Vec::new(), Vec::new());
    let mut rest = Vec::new();
    for e in effects.drain(..) {
        if e.is_unconditional() {
            base.adds.extend(e.adds);
            base.deletes.extend(e.deletes);
        } else {
            rest.push(e);
        }
    }
    effects.push(base);
    effects.extend(rest);
}

/// `body => head`, where the head's variables are typed by `parameters`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DerivedRule {
    pub head: Atom,
    pub parameters: Vec<TypedVar>,
    pub body: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimedLiteral {
    pub time: Rational,
    pub atom: GroundAtom,
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Makespan,
}

/// A typed lifted planning task (domain and, once attached, problem).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedTask {
    pub domain_name: String,
    pub problem_name: Option<String>,
    pub requirements: BTreeSet<String>,
    /// Child type → parent type. `object` itself is implicit.
    pub types: BTreeMap<String, String>,
    pub constants: BTreeMap<String, String>,
    pub objects: BTreeMap<String, String>,
    pub predicates: BTreeMap<String, Vec<TypedVar>>,
    pub functions: BTreeMap<String, Vec<TypedVar>>,
    pub operators: Vec<Operator>,
    pub derivation_rules: Vec<DerivedRule>,
    pub init: BTreeSet<GroundAtom>,
    pub numeric_init: BTreeMap<GroundAtom, Rational>,
    pub timed_literals: Vec<TimedLiteral>,
    pub goal: Formula,
    pub metric: Option<Metric>,
}

impl LiftedTask {
    pub fn empty(domain_name: &str) -> Self {
        LiftedTask {
            domain_name: domain_name.to_string(),
            problem_name: None,
            requirements: BTreeSet::new(),
            types: BTreeMap::new(),
            constants: BTreeMap::new(),
            objects: BTreeMap::new(),
            predicates: BTreeMap::new(),
            functions: BTreeMap::new(),
            operators: Vec::new(),
            derivation_rules: Vec::new(),
            init: BTreeSet::new(),
            numeric_init: BTreeMap::new(),
            timed_literals: Vec::new(),
            goal: Formula::truth(),
            metric: None,
        }
    }

    /// Instance name used for output files.
    pub fn instance_name(&self) -> &str {
        self.problem_name.as_deref().unwrap_or(&self.domain_name)
    }

    pub fn object_table(&self) -> ObjectTable {
        let mut objects = self.constants.clone();
        objects.extend(self.objects.iter().map(|(k, v)| (k.clone(), v.clone())));
        ObjectTable {
            types: self.types.clone(),
            objects,
        }
    }

    pub fn derived_predicates(&self) -> BTreeSet<String> {
        self.derivation_rules
            .iter()
            .map(|r| r.head.predicate.clone())
            .collect()
    }

    pub fn is_durative(&self) -> bool {
        self.operators.iter().any(|o| o.durative.is_some())
    }

    pub fn operator(&self, name: &str) -> Option<&Operator> {
        self.operators.iter().find(|o| o.name == name)
    }

    /// Check the structural invariants of a task.
    pub fn validate(&self) -> Result<(), ModelError> {
        let table = self.object_table();
        for ty in self.types.values().chain(table.objects.values()) {
            if ty != OBJECT_TYPE && !self.types.contains_key(ty) {
                return Err(ModelError::UnknownType(ty.clone()));
            }
        }
        let derived = self.derived_predicates();
        let check_atom = |a: &Atom| -> Result<(), ModelError> {
            if a.is_equality() {
                if a.args.len() != 2 {
                    return Err(ModelError::ArityMismatch {
                        predicate: EQUALITY.into(),
                        expected: 2,
                        found: a.args.len(),
                    });
                }
            } else {
                let params = self
                    .predicates
                    .get(&a.predicate)
                    .ok_or_else(|| ModelError::UnknownPredicate(a.predicate.clone()))?;
                if params.len() != a.args.len() {
                    return Err(ModelError::ArityMismatch {
                        predicate: a.predicate.clone(),
                        expected: params.len(),
                        found: a.args.len(),
                    });
                }
            }
            for t in &a.args {
                if let Term::Const(c) = t {
                    if !table.objects.contains_key(c) {
                        return Err(ModelError::UnknownObject(c.clone()));
                    }
                }
            }
            Ok(())
        };
        let check_formula = |f: &Formula, bound: &[TypedVar], ctx: &str| -> Result<(), ModelError> {
            let mut result = Ok(());
            f.visit_literals(&mut |a, _| {
                if result.is_ok() {
                    result = check_atom(a);
                }
            });
            result?;
            for v in f.free_variables() {
                if !bound.iter().any(|b| b.name == v) {
                    return Err(ModelError::UnboundVariable {
                        variable: v,
                        context: ctx.to_string(),
                    });
                }
            }
            Ok(())
        };
        for op in &self.operators {
            check_formula(&op.precondition, &op.parameters, &op.name)?;
            if let Some(d) = &op.durative {
                check_formula(&d.over_all, &op.parameters, &op.name)?;
                check_formula(&d.at_end, &op.parameters, &op.name)?;
            }
            for e in op.all_effects() {
                let mut bound = op.parameters.clone();
                bound.extend(e.params.iter().cloned());
                check_formula(&e.condition, &bound, &op.name)?;
                for a in e.adds.iter().chain(&e.deletes) {
                    if a.is_equality() {
                        return Err(ModelError::EqualityInEffect(op.name.clone()));
                    }
                    if derived.contains(&a.predicate) {
                        return Err(ModelError::DerivedInEffect {
                            predicate: a.predicate.clone(),
                            operator: op.name.clone(),
                        });
                    }
                    check_atom(a)?;
                    for v in a.variables() {
                        if !bound.iter().any(|b| b.name == v) {
                            return Err(ModelError::UnboundVariable {
                                variable: v.to_string(),
                                context: op.name.clone(),
                            });
                        }
                    }
                }
            }
        }
        for r in &self.derivation_rules {
            check_atom(&r.head)?;
            let ctx = format!("rule for {}", r.head.predicate);
            for v in r.head.variables() {
                if !r.parameters.iter().any(|p| p.name == v) {
                    return Err(ModelError::UnboundVariable {
                        variable: v.to_string(),
                        context: ctx.clone(),
                    });
                }
            }
            check_formula(&r.body, &r.parameters, &ctx)?;
        }
        for a in &self.init {
            check_atom(&a.to_atom())?;
        }
        check_formula(&self.goal, &[], "goal")?;
        validate_timed_literals(&self.timed_literals)?;
        for tl in &self.timed_literals {
            check_atom(&tl.atom.to_atom())?;
        }
        Ok(())
    }
}

/// Timed literals must lie strictly after time 0 and never contradict each other
/// at the same instant.
pub fn validate_timed_literals(tls: &[TimedLiteral]) -> Result<(), ModelError> {
    let mut seen: BTreeMap<(Rational, &GroundAtom), bool> = BTreeMap::new();
    for tl in tls {
        if tl.time <= Rational::from_integer(0) {
            return Err(ModelError::NonPositiveTimedLiteral {
                atom: tl.atom.to_string(),
                time: rational::format_number(&tl.time),
            });
        }
        if let Some(&pol) = seen.get(&(tl.time, &tl.atom)) {
            if pol != tl.positive {
                return Err(ModelError::ContradictoryTimedLiterals {
                    atom: tl.atom.to_string(),
                    time: rational::format_number(&tl.time),
                });
            }
        }
        seen.insert((tl.time, &tl.atom), tl.positive);
    }
    Ok(())
}

/// Objects with their types, plus the type hierarchy used for quantifier domains.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectTable {
    pub types: BTreeMap<String, String>,
    pub objects: BTreeMap<String, String>,
}

impl ObjectTable {
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE {
            return true;
        }
        let mut cur = ty;
        // The hierarchy is finite; the bound guards against cyclic declarations.
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    /// Objects of the given type (including subtypes), sorted by name.
    pub fn objects_of(&self, ty: &str) -> Vec<String> {
        self.objects
            .iter()
            .filter(|(_, t)| self.is_subtype(t, ty))
            .map(|(o, _)| o.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_respects_quantifier_shadowing() {
        let f = Formula::And(vec![
            Formula::atom("p", vec![Term::var("x")]),
            Formula::Exists(
                vec![TypedVar::new("x", OBJECT_TYPE)],
                Box::new(Formula::atom("q", vec![Term::var("x")])),
            ),
        ]);
        let mut b = Binding::new();
        b.insert("x".into(), "a".into());
        let g = f.substitute(&b);
        assert_eq!(g.to_string(), "(and (p a) (exists (?x - object) (q ?x)))");
        assert!(g.free_variables().is_empty());
    }

    #[test]
    fn subtype_objects() {
        let mut t = ObjectTable::default();
        t.types.insert("truck".into(), "vehicle".into());
        t.types.insert("vehicle".into(), OBJECT_TYPE.into());
        t.objects.insert("t1".into(), "truck".into());
        t.objects.insert("v1".into(), "vehicle".into());
        t.objects.insert("x".into(), OBJECT_TYPE.into());
        assert_eq!(t.objects_of("vehicle"), vec!["t1", "v1"]);
        assert_eq!(t.objects_of(OBJECT_TYPE).len(), 3);
        assert!(t.objects_of("truck").len() == 1);
    }

    #[test]
    fn contradictory_timed_literals_rejected() {
        let a = GroundAtom::new("bar-open", &[]);
        let tls = vec![
            TimedLiteral { time: Rational::from_integer(3), atom: a.clone(), positive: true },
            TimedLiteral { time: Rational::from_integer(3), atom: a, positive: false },
        ];
        assert!(matches!(
            validate_timed_literals(&tls),
            Err(ModelError::ContradictoryTimedLiterals { .. })
        ));
    }
}
