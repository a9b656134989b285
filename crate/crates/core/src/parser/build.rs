//! Construction of [`LiftedTask`]s from s-expressions.

use std::collections::{BTreeMap, BTreeSet};

use super::diagnostics::{ParseDiagnostic, ParseError, SourceSpan};
use super::sexpr::{read, SExpr};
use crate::model::rational::parse_number;
use crate::model::{
    merge_unconditional, validate_timed_literals, Atom, ConditionalEffect, DerivedRule, Durative,
    DurationExpr, Formula, GroundAtom, LiftedTask, Metric, ModelError, Operator, Rational, Term,
    TimedLiteral, TypedVar, EQUALITY, OBJECT_TYPE,
};

/// Requirement flags this parser understands.
pub const SUPPORTED_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":equality",
    ":negative-preconditions",
    ":disjunctive-preconditions",
    ":existential-preconditions",
    ":universal-preconditions",
    ":quantified-preconditions",
    ":conditional-effects",
    ":adl",
    ":derived-predicates",
    ":timed-initial-literals",
    ":durative-actions",
];

const ADL_IMPLIES: &[&str] = &[
    ":strips",
    ":typing",
    ":equality",
    ":negative-preconditions",
    ":disjunctive-preconditions",
    ":existential-preconditions",
    ":universal-preconditions",
    ":quantified-preconditions",
    ":conditional-effects",
];

/// A successfully parsed task with the warnings produced on the way.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub task: LiftedTask,
    pub diagnostics: Vec<ParseDiagnostic>,
}

type PResult<T> = Result<T, ParseDiagnostic>;

fn err<T>(msg: impl Into<String>, span: SourceSpan) -> PResult<T> {
    Err(ParseDiagnostic::error(msg, span))
}

pub fn parse_domain(text: &str) -> Result<Parsed, ParseError> {
    parse_domain_file(0, text)
}

pub fn parse_domain_file(file: u32, text: &str) -> Result<Parsed, ParseError> {
    let mut b = Builder::new(LiftedTask::empty(""));
    let result = read(file, text).and_then(|e| b.domain(&e));
    b.finish(result)
}

pub fn parse_problem(text: &str, domain: &LiftedTask) -> Result<Parsed, ParseError> {
    parse_problem_file(1, text, domain)
}

pub fn parse_problem_file(file: u32, text: &str, domain: &LiftedTask) -> Result<Parsed, ParseError> {
    let mut b = Builder::new(domain.clone());
    let result = read(file, text).and_then(|e| b.problem(&e));
    b.finish(result)
}

/// Parse a domain and a problem; warnings of both are concatenated.
pub fn parse_task(domain_text: &str, problem_text: &str) -> Result<Parsed, ParseError> {
    let d = parse_domain(domain_text)?;
    let mut p = parse_problem(problem_text, &d.task).map_err(|mut e| {
        let mut all = d.diagnostics.clone();
        all.append(&mut e.diagnostics);
        ParseError { diagnostics: all }
    })?;
    let mut all = d.diagnostics;
    all.append(&mut p.diagnostics);
    p.diagnostics = all;
    Ok(p)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Time {
    Start,
    End,
}

struct Builder {
    task: LiftedTask,
    diags: Vec<ParseDiagnostic>,
    derived: BTreeSet<String>,
}

impl Builder {
    fn new(task: LiftedTask) -> Self {
        let derived = task.derived_predicates();
        Builder {
            task,
            diags: Vec::new(),
            derived,
        }
    }

    fn finish(mut self, result: PResult<()>) -> Result<Parsed, ParseError> {
        match result {
            Ok(()) => Ok(Parsed {
                task: self.task,
                diagnostics: self.diags,
            }),
            Err(d) => {
                self.diags.push(d);
                Err(ParseError {
                    diagnostics: self.diags,
                })
            }
        }
    }

    fn warn(&mut self, msg: impl Into<String>, span: SourceSpan) {
        self.diags.push(ParseDiagnostic::warning(msg, span));
    }

    fn has(&self, flag: &str) -> bool {
        let r = &self.task.requirements;
        if r.contains(flag) {
            return true;
        }
        if r.contains(":adl") && ADL_IMPLIES.contains(&flag) {
            return true;
        }
        if r.contains(":quantified-preconditions")
            && matches!(flag, ":existential-preconditions" | ":universal-preconditions")
        {
            return true;
        }
        flag == ":strips"
    }

    fn require(&mut self, flag: &str, what: &str, span: SourceSpan) {
        if !self.has(flag) {
            self.warn(format!("{what} used without declaring {flag}"), span);
        }
    }

    fn is_object(&self, name: &str) -> bool {
        self.task.constants.contains_key(name) || self.task.objects.contains_key(name)
    }

    fn is_type(&self, name: &str) -> bool {
        name == OBJECT_TYPE || self.task.types.contains_key(name)
    }

    // ---- generic helpers -------------------------------------------------

    fn sym<'e>(&self, e: &'e SExpr, what: &str) -> PResult<&'e str> {
        e.as_sym()
            .ok_or_else(|| ParseDiagnostic::error(format!("expected {what}"), e.span()))
    }

    fn list<'e>(&self, e: &'e SExpr, what: &str) -> PResult<&'e [SExpr]> {
        e.as_list()
            .ok_or_else(|| ParseDiagnostic::error(format!("expected {what}"), e.span()))
    }

    /// `a b - t c` as (name, type, span) triples.
    fn typed_list(&self, items: &[SExpr], vars: bool) -> PResult<Vec<(String, String, SourceSpan)>> {
        let mut out = Vec::new();
        let mut pending: Vec<(String, SourceSpan)> = Vec::new();
        let mut i = 0;
        while i < items.len() {
            let e = &items[i];
            if e.as_sym() == Some("-") {
                let ty = items
                    .get(i + 1)
                    .ok_or_else(|| ParseDiagnostic::error("missing type after '-'", e.span()))?;
                if ty.head() == Some("either") {
                    return err("'either' types are not supported", ty.span());
                }
                let ty = self.sym(ty, "a type name")?;
                if pending.is_empty() {
                    return err("type annotation without names", e.span());
                }
                for (n, s) in pending.drain(..) {
                    out.push((n, ty.to_string(), s));
                }
                i += 2;
                continue;
            }
            let name = self.sym(e, if vars { "a variable" } else { "a name" })?;
            let name = if vars {
                match name.strip_prefix('?') {
                    Some(n) if !n.is_empty() => n,
                    _ => return err(format!("expected a variable, found '{name}'"), e.span()),
                }
            } else {
                if name.starts_with('?') {
                    return err(format!("unexpected variable '{name}'"), e.span());
                }
                name
            };
            pending.push((name.to_string(), e.span()));
            i += 1;
        }
        for (n, s) in pending {
            out.push((n, OBJECT_TYPE.to_string(), s));
        }
        Ok(out)
    }

    fn typed_vars(&self, e: &SExpr) -> PResult<Vec<TypedVar>> {
        let items = self.list(e, "a parameter list")?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (n, ty, span) in self.typed_list(items, true)? {
            if !self.is_type(&ty) {
                return err(format!("unknown type '{ty}'"), span);
            }
            if !seen.insert(n.clone()) {
                return err(format!("duplicate variable ?{n}"), span);
            }
            out.push(TypedVar::new(&n, &ty));
        }
        Ok(out)
    }

    // ---- domain ------------------------------------------------------------

    fn domain(&mut self, e: &SExpr) -> PResult<()> {
        let items = self.list(e, "(define ...)")?;
        if items.first().and_then(SExpr::as_sym) != Some("define") {
            return err("expected (define (domain ...) ...)", e.span());
        }
        let header = items
            .get(1)
            .ok_or_else(|| ParseDiagnostic::error("missing domain header", e.span()))?;
        let h = self.list(header, "(domain <name>)")?;
        if h.len() != 2 || h[0].as_sym() != Some("domain") {
            return err("expected (domain <name>)", header.span());
        }
        self.task.domain_name = self.sym(&h[1], "a domain name")?.to_string();
        let sections = &items[2..];
        // Declarations first, then rules (so effect checks know the derived set),
        // then actions.
        let mut rules = Vec::new();
        let mut actions = Vec::new();
        for s in sections {
            let key = s.head().ok_or_else(|| ParseDiagnostic::error("expected a section", s.span()))?;
            let body = &s.as_list().unwrap()[1..];
            match key {
                ":requirements" => self.requirements(body)?,
                ":types" => self.types(body)?,
                ":constants" => {
                    let decls = self.objects_decl(body)?;
                    for (n, t, span) in decls {
                        if self.task.constants.insert(n.clone(), t).is_some() {
                            return err(format!("duplicate constant '{n}'"), span);
                        }
                    }
                }
                ":predicates" => self.predicates(body)?,
                ":functions" => self.functions(s.span(), body)?,
                ":derived" => rules.push(s),
                ":action" | ":durative-action" => actions.push(s),
                other => return err(format!("unsupported domain section '{other}'"), s.span()),
            }
        }
        for s in &rules {
            if let Some(head) = s.as_list().unwrap().get(1).and_then(SExpr::head) {
                self.derived.insert(head.to_string());
            }
        }
        for s in rules {
            let r = self.derived_rule(s)?;
            self.task.derivation_rules.push(r);
        }
        let mut names = BTreeSet::new();
        for s in actions {
            let op = self.action(s)?;
            if !names.insert(op.name.clone()) {
                return err(format!("duplicate action '{}'", op.name), s.span());
            }
            self.task.operators.push(op);
        }
        self.final_check(e.span())
    }

    fn final_check(&self, span: SourceSpan) -> PResult<()> {
        self.task
            .validate()
            .map_err(|m| ParseDiagnostic::error(m.to_string(), span))
    }

    fn requirements(&mut self, body: &[SExpr]) -> PResult<()> {
        for f in body {
            let flag = self.sym(f, "a requirement flag")?;
            if !SUPPORTED_REQUIREMENTS.contains(&flag) {
                return err(format!("unsupported requirement {flag}"), f.span());
            }
            self.task.requirements.insert(flag.to_string());
        }
        if self.task.requirements.contains(":adl") {
            for f in body {
                let flag = f.as_sym().unwrap();
                if ADL_IMPLIES.contains(&flag) {
                    self.warn(format!("{flag} is redundant next to :adl"), f.span());
                }
            }
        }
        Ok(())
    }

    fn types(&mut self, body: &[SExpr]) -> PResult<()> {
        self.require(":typing", "(:types ...)", body.first().map(SExpr::span).unwrap_or_default());
        for (n, parent, span) in self.typed_list(body, false)? {
            if n == OBJECT_TYPE {
                continue;
            }
            if self.task.types.insert(n.clone(), parent).is_some() {
                return err(format!("duplicate type '{n}'"), span);
            }
        }
        let parents: Vec<String> = self.task.types.values().cloned().collect();
        for p in parents {
            if p != OBJECT_TYPE && !self.task.types.contains_key(&p) {
                self.task.types.insert(p, OBJECT_TYPE.to_string());
            }
        }
        for t in self.task.types.keys() {
            let mut cur = t.as_str();
            for _ in 0..=self.task.types.len() {
                match self.task.types.get(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if cur != OBJECT_TYPE {
                return err(format!("cyclic type hierarchy at '{t}'"), body[0].span());
            }
        }
        Ok(())
    }

    fn objects_decl(&self, body: &[SExpr]) -> PResult<Vec<(String, String, SourceSpan)>> {
        let decls = self.typed_list(body, false)?;
        for (_, t, span) in &decls {
            if !self.is_type(t) {
                return err(format!("unknown type '{t}'"), *span);
            }
        }
        Ok(decls)
    }

    fn predicates(&mut self, body: &[SExpr]) -> PResult<()> {
        for p in body {
            let items = self.list(p, "a predicate declaration")?;
            let name = items
                .first()
                .ok_or_else(|| ParseDiagnostic::error("empty predicate declaration", p.span()))?;
            let name = self.sym(name, "a predicate name")?;
            if name == EQUALITY {
                return err("'=' is built in", p.span());
            }
            let params = self.typed_vars(&SExpr::List(items[1..].to_vec(), p.span()))?;
            if self.task.predicates.insert(name.to_string(), params).is_some() {
                return err(format!("duplicate predicate '{name}'"), p.span());
            }
        }
        Ok(())
    }

    fn functions(&mut self, span: SourceSpan, body: &[SExpr]) -> PResult<()> {
        self.require(":durative-actions", "(:functions ...) for durations", span);
        let mut i = 0;
        while i < body.len() {
            let f = &body[i];
            let items = self.list(f, "a function declaration")?;
            let name = self.sym(
                items
                    .first()
                    .ok_or_else(|| ParseDiagnostic::error("empty function declaration", f.span()))?,
                "a function name",
            )?;
            let params = self.typed_vars(&SExpr::List(items[1..].to_vec(), f.span()))?;
            self.task.functions.insert(name.to_string(), params);
            i += 1;
            if body.get(i).and_then(SExpr::as_sym) == Some("-") {
                match body.get(i + 1).and_then(SExpr::as_sym) {
                    Some("number") => i += 2,
                    _ => return err("only numeric functions are supported", body[i].span()),
                }
            }
        }
        Ok(())
    }

    fn derived_rule(&mut self, s: &SExpr) -> PResult<DerivedRule> {
        self.require(":derived-predicates", "(:derived ...)", s.span());
        let items = s.as_list().unwrap();
        if items.len() != 3 {
            return err("expected (:derived (<head>) <body>)", s.span());
        }
        let head = self.list(&items[1], "a rule head")?;
        let pred = self.sym(
            head.first()
                .ok_or_else(|| ParseDiagnostic::error("empty rule head", items[1].span()))?,
            "a predicate name",
        )?;
        let mut params = Vec::new();
        let mut args = Vec::new();
        let mut i = 1;
        while i < head.len() {
            let e = &head[i];
            let name = self.sym(e, "a head argument")?;
            if let Some(v) = name.strip_prefix('?') {
                let mut ty = OBJECT_TYPE.to_string();
                if head.get(i + 1).and_then(SExpr::as_sym) == Some("-") {
                    let t = head
                        .get(i + 2)
                        .ok_or_else(|| ParseDiagnostic::error("missing type after '-'", e.span()))?;
                    ty = self.sym(t, "a type name")?.to_string();
                    if !self.is_type(&ty) {
                        return err(format!("unknown type '{ty}'"), t.span());
                    }
                    i += 2;
                }
                if params.iter().any(|p: &TypedVar| p.name == v) {
                    return err(format!("duplicate variable ?{v}"), e.span());
                }
                params.push(TypedVar::new(v, &ty));
                args.push(Term::var(v));
            } else {
                if !self.is_object(name) {
                    return err(format!("unknown object '{name}'"), e.span());
                }
                args.push(Term::constant(name));
            }
            i += 1;
        }
        let head_atom = Atom::new(pred, args);
        self.check_atom(&head_atom, items[1].span())?;
        let mut scope = params.clone();
        let body = self.formula(&items[2], &mut scope)?;
        Ok(DerivedRule {
            head: head_atom,
            parameters: params,
            body,
        })
    }

    fn action(&mut self, s: &SExpr) -> PResult<Operator> {
        let items = s.as_list().unwrap();
        let name = self.sym(
            items
                .get(1)
                .ok_or_else(|| ParseDiagnostic::error("missing action name", s.span()))?,
            "an action name",
        )?;
        let mut fields: BTreeMap<&str, &SExpr> = BTreeMap::new();
        let mut i = 2;
        while i < items.len() {
            let key = self.sym(&items[i], "an action field keyword")?;
            let value = items
                .get(i + 1)
                .ok_or_else(|| ParseDiagnostic::error(format!("missing value for {key}"), items[i].span()))?;
            match key {
                ":parameters" | ":precondition" | ":effect" | ":duration" | ":condition" => {}
                _ => return err(format!("unknown action field {key}"), items[i].span()),
            }
            if fields.insert(key, value).is_some() {
                return err(format!("duplicate field {key}"), items[i].span());
            }
            i += 2;
        }
        let params = match fields.get(":parameters") {
            Some(p) => self.typed_vars(p)?,
            None => Vec::new(),
        };
        let durative = s.head() == Some(":durative-action")
            || fields.contains_key(":duration")
            || fields.contains_key(":condition");
        if durative && s.head() == Some(":action") {
            self.warn(format!("action '{name}' has a duration and is read as durative"), s.span());
        }
        let mut op = Operator::new(name, params.clone(), Formula::truth());
        if durative {
            self.require(":durative-actions", "durative action", s.span());
            if let Some(p) = fields.get(":precondition") {
                return err("durative actions use :condition", p.span());
            }
            let dur = fields
                .get(":duration")
                .ok_or_else(|| ParseDiagnostic::error("missing :duration", s.span()))?;
            let duration = self.duration(dur, &params)?;
            let (start, over_all, end) = match fields.get(":condition") {
                Some(c) => self.durative_condition(c, &params)?,
                None => (Formula::truth(), Formula::truth(), Formula::truth()),
            };
            op.precondition = start;
            let mut start_effects = Vec::new();
            if let Some(e) = fields.get(":effect") {
                let mut scope = params.clone();
                self.effect(e, &mut scope, &[], &[], Some(None), &mut start_effects, &mut op.effects, name)?;
            }
            merge_unconditional(&mut start_effects);
            op.durative = Some(Durative {
                duration,
                over_all,
                at_end: end,
                start_effects,
            });
        } else {
            if let Some(c) = fields.get(":precondition") {
                let mut scope = params.clone();
                op.precondition = self.formula(c, &mut scope)?;
            }
            if let Some(e) = fields.get(":effect") {
                let mut scope = params.clone();
                let mut unused = Vec::new();
                self.effect(e, &mut scope, &[], &[], None, &mut unused, &mut op.effects, name)?;
            }
        }
        merge_unconditional(&mut op.effects);
        Ok(op)
    }

    fn duration(&mut self, e: &SExpr, scope: &[TypedVar]) -> PResult<DurationExpr> {
        let items = self.list(e, "(= ?duration <value>)")?;
        let head = items.first().and_then(SExpr::as_sym);
        if matches!(head, Some("<=" | ">=" | "<" | ">" | "and")) {
            return err("duration inequalities are not supported", e.span());
        }
        if head != Some("=") || items.len() != 3 || items[1].as_sym() != Some("?duration") {
            return err("expected (= ?duration <value>)", e.span());
        }
        match &items[2] {
            SExpr::Sym(s, span) => match parse_number(s) {
                Some(r) if r >= Rational::from_integer(0) => Ok(DurationExpr::Const(r)),
                _ => err(format!("invalid duration '{s}'"), *span),
            },
            SExpr::List(f, span) => {
                let name = self.sym(
                    f.first().ok_or_else(|| ParseDiagnostic::error("empty duration expression", *span))?,
                    "a function name",
                )?;
                if matches!(name, "+" | "-" | "*" | "/") {
                    return err("arithmetic duration expressions are not supported", *span);
                }
                let params = self
                    .task
                    .functions
                    .get(name)
                    .ok_or_else(|| ParseDiagnostic::error(format!("unknown function '{name}'"), *span))?;
                if params.len() != f.len() - 1 {
                    return err(
                        format!("function '{name}' expects {} arguments, got {}", params.len(), f.len() - 1),
                        *span,
                    );
                }
                let mut args = Vec::new();
                for a in &f[1..] {
                    args.push(self.term(a, scope)?);
                }
                Ok(DurationExpr::Function(Atom::new(name, args)))
            }
        }
    }

    fn durative_condition(&mut self, e: &SExpr, params: &[TypedVar]) -> PResult<(Formula, Formula, Formula)> {
        let parts: Vec<&SExpr> = match e.head() {
            Some("and") => e.as_list().unwrap()[1..].iter().collect(),
            None if e.as_list().map(|l| l.is_empty()).unwrap_or(false) => Vec::new(),
            _ => vec![e],
        };
        let mut groups: [Vec<Formula>; 3] = Default::default();
        for p in parts {
            let items = self.list(p, "a timed condition")?;
            let (slot, body) = match (items.first().and_then(SExpr::as_sym), items.get(1).and_then(SExpr::as_sym)) {
                (Some("at"), Some("start")) if items.len() == 3 => (0, &items[2]),
                (Some("over"), Some("all")) if items.len() == 3 => (1, &items[2]),
                (Some("at"), Some("end")) if items.len() == 3 => (2, &items[2]),
                _ => return err("expected (at start ...), (over all ...) or (at end ...)", p.span()),
            };
            let mut scope = params.to_vec();
            groups[slot].push(self.formula(body, &mut scope)?);
        }
        let join = |mut v: Vec<Formula>| match v.len() {
            0 => Formula::truth(),
            1 => v.pop().unwrap(),
            _ => Formula::And(v),
        };
        let [a, b, c] = groups;
        Ok((join(a), join(b), join(c)))
    }

    // ---- formulas ----------------------------------------------------------

    fn term(&self, e: &SExpr, scope: &[TypedVar]) -> PResult<Term> {
        let s = self.sym(e, "a term")?;
        if let Some(v) = s.strip_prefix('?') {
            if !scope.iter().any(|t| t.name == v) {
                return err(format!("variable ?{v} is not bound"), e.span());
            }
            Ok(Term::var(v))
        } else {
            if !self.is_object(s) {
                return err(format!("unknown object '{s}'"), e.span());
            }
            Ok(Term::constant(s))
        }
    }

    fn check_atom(&self, a: &Atom, span: SourceSpan) -> PResult<()> {
        if a.is_equality() {
            if a.args.len() != 2 {
                return err("'=' takes two arguments", span);
            }
            return Ok(());
        }
        let params = self
            .task
            .predicates
            .get(&a.predicate)
            .ok_or_else(|| ParseDiagnostic::error(format!("unknown predicate '{}'", a.predicate), span))?;
        if params.len() != a.args.len() {
            return err(
                format!(
                    "predicate '{}' expects {} arguments, got {}",
                    a.predicate,
                    params.len(),
                    a.args.len()
                ),
                span,
            );
        }
        Ok(())
    }

    fn atom(&mut self, e: &SExpr, scope: &[TypedVar]) -> PResult<Atom> {
        let items = self.list(e, "an atom")?;
        let pred = self.sym(
            items.first().ok_or_else(|| ParseDiagnostic::error("empty atom", e.span()))?,
            "a predicate name",
        )?;
        let mut args = Vec::new();
        for a in &items[1..] {
            args.push(self.term(a, scope)?);
        }
        let atom = Atom::new(pred, args);
        self.check_atom(&atom, e.span())?;
        if atom.is_equality() {
            self.require(":equality", "'='", e.span());
        }
        Ok(atom)
    }

    fn formula(&mut self, e: &SExpr, scope: &mut Vec<TypedVar>) -> PResult<Formula> {
        let items = self.list(e, "a formula")?;
        if items.is_empty() {
            return Ok(Formula::truth());
        }
        let head = self.sym(&items[0], "a formula head")?;
        let arity = |n: usize| -> PResult<()> {
            if items.len() != n + 1 {
                return err(format!("'{head}' expects {n} argument(s)"), e.span());
            }
            Ok(())
        };
        match head {
            "and" => {
                let mut v = Vec::new();
                for g in &items[1..] {
                    v.push(self.formula(g, scope)?);
                }
                Ok(Formula::And(v))
            }
            "or" => {
                self.require(":disjunctive-preconditions", "'or'", e.span());
                let mut v = Vec::new();
                for g in &items[1..] {
                    v.push(self.formula(g, scope)?);
                }
                Ok(Formula::Or(v))
            }
            "not" => {
                arity(1)?;
                if items[1].head() != Some(EQUALITY) {
                    self.require(":negative-preconditions", "'not'", e.span());
                }
                Ok(Formula::not(self.formula(&items[1], scope)?))
            }
            "imply" => {
                arity(2)?;
                self.require(":disjunctive-preconditions", "'imply'", e.span());
                let a = self.formula(&items[1], scope)?;
                let b = self.formula(&items[2], scope)?;
                Ok(Formula::Imply(Box::new(a), Box::new(b)))
            }
            "forall" | "exists" => {
                arity(2)?;
                let flag = if head == "forall" {
                    ":universal-preconditions"
                } else {
                    ":existential-preconditions"
                };
                self.require(flag, head, e.span());
                let vars = self.typed_vars(&items[1])?;
                let n = scope.len();
                scope.extend(vars.iter().cloned());
                let body = self.formula(&items[2], scope);
                scope.truncate(n);
                let body = Box::new(body?);
                Ok(if head == "forall" {
                    Formula::Forall(vars, body)
                } else {
                    Formula::Exists(vars, body)
                })
            }
            "<" | ">" | "<=" | ">=" => err("numeric conditions are not supported", e.span()),
            "at" | "over" if is_timed(e) => err("timed condition outside a durative action condition", e.span()),
            _ => Ok(Formula::Atom(self.atom(e, scope)?)),
        }
    }

    // ---- effects -----------------------------------------------------------

    fn literal(&mut self, e: &SExpr, scope: &[TypedVar], op: &str) -> PResult<Option<(Atom, bool)>> {
        let (inner, positive) = match e.head() {
            Some("not") => {
                let items = e.as_list().unwrap();
                if items.len() != 2 {
                    return err("'not' expects 1 argument", e.span());
                }
                (&items[1], false)
            }
            Some("and" | "or" | "when" | "forall" | "exists" | "imply") => return Ok(None),
            Some("at" | "over") if is_timed(e) => return Ok(None),
            Some("increase" | "decrease" | "assign" | "scale-up" | "scale-down") => {
                return err("numeric effects are not supported", e.span())
            }
            _ => (e, true),
        };
        let a = self.atom(inner, scope)?;
        if a.is_equality() {
            return Err(ParseDiagnostic::error(
                ModelError::EqualityInEffect(op.to_string()).to_string(),
                inner.span(),
            ));
        }
        if self.derived.contains(&a.predicate) {
            return Err(ParseDiagnostic::error(
                ModelError::DerivedInEffect {
                    predicate: a.predicate.clone(),
                    operator: op.to_string(),
                }
                .to_string(),
                inner.span(),
            ));
        }
        Ok(Some((a, positive)))
    }

    fn entry(params: &[TypedVar], conds: &[Formula]) -> ConditionalEffect {
        ConditionalEffect {
            params: params.to_vec(),
            condition: match conds.len() {
                0 => Formula::truth(),
                1 => conds[0].clone(),
                _ => Formula::And(conds.to_vec()),
            },
            adds: Vec::new(),
            deletes: Vec::new(),
        }
    }

    /// Flatten an effect into `ConditionalEffect` entries. `time` is `None` for
    /// classical actions, `Some(None)` inside a durative action before an
    /// `at start`/`at end` wrapper and `Some(Some(t))` after one.
    #[allow(clippy::too_many_arguments)]
    fn effect(
        &mut self,
        e: &SExpr,
        scope: &mut Vec<TypedVar>,
        params: &[TypedVar],
        conds: &[Formula],
        time: Option<Option<Time>>,
        start_out: &mut Vec<ConditionalEffect>,
        out: &mut Vec<ConditionalEffect>,
        op: &str,
    ) -> PResult<()> {
        let items = self.list(e, "an effect")?;
        if items.is_empty() {
            return Ok(());
        }
        match e.head() {
            Some("and") => {
                // Literals directly under this conjunction form one entry per time point.
                let mut groups: Vec<(Option<Time>, ConditionalEffect)> = Vec::new();
                let mut nested: Vec<&SExpr> = Vec::new();
                for c in &items[1..] {
                    let (lit_expr, t) = match (time, c.head()) {
                        (Some(None), Some("at")) if is_timed(c) => {
                            let l = c.as_list().unwrap();
                            match (l.get(1).and_then(SExpr::as_sym), l.len()) {
                                (Some("start"), 3) => (&l[2], Some(Time::Start)),
                                (Some("end"), 3) => (&l[2], Some(Time::End)),
                                _ => return err("expected (at start ...) or (at end ...)", c.span()),
                            }
                        }
                        (Some(t), _) => (c, t),
                        (None, _) => (c, None),
                    };
                    match self.literal(lit_expr, scope, op)? {
                        Some((a, pos)) => {
                            if time == Some(None) && t.is_none() {
                                return err("durative effects must be wrapped in (at start ...) or (at end ...)", c.span());
                            }
                            let idx = match groups.iter().position(|(gt, _)| *gt == t) {
                                Some(i) => i,
                                None => {
                                    groups.push((t, Self::entry(params, conds)));
                                    groups.len() - 1
                                }
                            };
                            let g = &mut groups[idx].1;
                            if pos {
                                g.adds.push(a);
                            } else {
                                g.deletes.push(a);
                            }
                        }
                        None => nested.push(c),
                    }
                }
                for (t, g) in groups {
                    if t == Some(Time::Start) {
                        start_out.push(g);
                    } else {
                        out.push(g);
                    }
                }
                for c in nested {
                    self.effect(c, scope, params, conds, time, start_out, out, op)?;
                }
                Ok(())
            }
            Some("forall") => {
                self.require(":conditional-effects", "'forall' effect", e.span());
                if items.len() != 3 {
                    return err("'forall' expects 2 arguments", e.span());
                }
                let vars = self.typed_vars(&items[1])?;
                let mut p = params.to_vec();
                p.extend(vars.iter().cloned());
                let n = scope.len();
                scope.extend(vars);
                let r = self.effect(&items[2], scope, &p, conds, time, start_out, out, op);
                scope.truncate(n);
                r
            }
            Some("when") => {
                self.require(":conditional-effects", "'when' effect", e.span());
                if items.len() != 3 {
                    return err("'when' expects 2 arguments", e.span());
                }
                let cond_expr = if time.is_some() {
                    let l = self.list(&items[1], "a timed effect condition")?;
                    match (l.first().and_then(SExpr::as_sym), l.get(1).and_then(SExpr::as_sym), l.len()) {
                        (Some("at"), Some("start"), 3) => &l[2],
                        _ => {
                            return err(
                                "conditions of durative conditional effects must be (at start ...)",
                                items[1].span(),
                            )
                        }
                    }
                } else {
                    &items[1]
                };
                let c = self.formula(cond_expr, scope)?;
                let mut cs = conds.to_vec();
                cs.push(c);
                self.effect(&items[2], scope, params, &cs, time, start_out, out, op)
            }
            Some("at") if time == Some(None) && is_timed(e) => {
                let t = match (items.get(1).and_then(SExpr::as_sym), items.len()) {
                    (Some("start"), 3) => Time::Start,
                    (Some("end"), 3) => Time::End,
                    _ => return err("expected (at start ...) or (at end ...)", e.span()),
                };
                self.effect(&items[2], scope, params, conds, Some(Some(t)), start_out, out, op)
            }
            _ => match self.literal(e, scope, op)? {
                Some((a, pos)) => {
                    if time == Some(None) {
                        return err("durative effects must be wrapped in (at start ...) or (at end ...)", e.span());
                    }
                    let mut g = Self::entry(params, conds);
                    if pos {
                        g.adds.push(a);
                    } else {
                        g.deletes.push(a);
                    }
                    if time == Some(Some(Time::Start)) {
                        start_out.push(g);
                    } else {
                        out.push(g);
                    }
                    Ok(())
                }
                None => err("unsupported effect", e.span()),
            },
        }
    }

    // ---- problem -----------------------------------------------------------

    fn problem(&mut self, e: &SExpr) -> PResult<()> {
        let items = self.list(e, "(define ...)")?;
        if items.first().and_then(SExpr::as_sym) != Some("define") {
            return err("expected (define (problem ...) ...)", e.span());
        }
        let header = items
            .get(1)
            .ok_or_else(|| ParseDiagnostic::error("missing problem header", e.span()))?;
        let h = self.list(header, "(problem <name>)")?;
        if h.len() != 2 || h[0].as_sym() != Some("problem") {
            return err("expected (problem <name>)", header.span());
        }
        self.task.problem_name = Some(self.sym(&h[1], "a problem name")?.to_string());
        let sections = &items[2..];
        let get = |key: &str| sections.iter().find(|s| s.head() == Some(key));
        for s in sections {
            match s.head() {
                Some(":domain" | ":objects" | ":init" | ":goal" | ":metric" | ":requirements") => {}
                _ => return err("unsupported problem section", s.span()),
            }
        }
        if let Some(d) = get(":domain") {
            let l = d.as_list().unwrap();
            let name = l.get(1).and_then(SExpr::as_sym).unwrap_or("");
            if name != self.task.domain_name {
                self.warn(
                    format!("problem names domain '{name}' but domain '{}' was given", self.task.domain_name),
                    d.span(),
                );
            }
        }
        if let Some(r) = get(":requirements") {
            self.requirements(&r.as_list().unwrap()[1..])?;
        }
        if let Some(o) = get(":objects") {
            for (n, t, span) in self.objects_decl(&o.as_list().unwrap()[1..])? {
                if self.task.constants.contains_key(&n) {
                    return err(format!("object '{n}' redeclares a domain constant"), span);
                }
                if self.task.objects.insert(n.clone(), t).is_some() {
                    return err(format!("duplicate object '{n}'"), span);
                }
            }
        }
        if let Some(i) = get(":init") {
            for x in &i.as_list().unwrap()[1..] {
                self.init_entry(x)?;
            }
            if let Err(m) = validate_timed_literals(&self.task.timed_literals) {
                return err(m.to_string(), i.span());
            }
        }
        match get(":goal") {
            Some(g) => {
                let l = g.as_list().unwrap();
                if l.len() != 2 {
                    return err("expected (:goal <formula>)", g.span());
                }
                self.task.goal = self.formula(&l[1], &mut Vec::new())?;
            }
            None => self.warn("problem has no goal", e.span()),
        }
        if let Some(m) = get(":metric") {
            let l = m.as_list().unwrap();
            let ok = l.len() == 3
                && l[1].as_sym() == Some("minimize")
                && l[2].as_list().map(|x| x.len() == 1 && x[0].as_sym() == Some("total-time")) == Some(true);
            if ok {
                self.task.metric = Some(Metric::Makespan);
            } else {
                self.warn("only (:metric minimize (total-time)) is supported; metric ignored", m.span());
            }
        }
        self.final_check(e.span())
    }

    fn ground_atom(&mut self, e: &SExpr) -> PResult<GroundAtom> {
        let a = self.atom(e, &[])?;
        if a.is_equality() {
            return err("'=' cannot be asserted", e.span());
        }
        Ok(a.to_ground().expect("no variables in scope"))
    }

    fn init_entry(&mut self, x: &SExpr) -> PResult<()> {
        let items = self.list(x, "an initial fact")?;
        let head = items.first().and_then(SExpr::as_sym);
        let is_til = head == Some("at")
            && items.len() == 3
            && items[1].as_sym().and_then(parse_number).is_some()
            && items[2].as_list().is_some();
        if is_til {
            self.require(":timed-initial-literals", "timed initial literal", x.span());
            let time = parse_number(items[1].as_sym().unwrap()).unwrap();
            let (atom_e, positive) = match items[2].head() {
                Some("not") => {
                    let l = items[2].as_list().unwrap();
                    if l.len() != 2 {
                        return err("'not' expects 1 argument", items[2].span());
                    }
                    (&l[1], false)
                }
                _ => (&items[2], true),
            };
            if time <= Rational::from_integer(0) {
                return err(
                    format!("timed literal at non-positive time {}", items[1].as_sym().unwrap()),
                    items[1].span(),
                );
            }
            let atom = self.ground_atom(atom_e)?;
            self.task.timed_literals.push(TimedLiteral { time, atom, positive });
            return Ok(());
        }
        match head {
            Some("=") => {
                if items.len() != 3 {
                    return err("expected (= (<function> ...) <number>)", x.span());
                }
                let f = self.list(&items[1], "a function term")?;
                let name = self.sym(
                    f.first().ok_or_else(|| ParseDiagnostic::error("empty function term", items[1].span()))?,
                    "a function name",
                )?;
                let arity = self
                    .task
                    .functions
                    .get(name)
                    .map(Vec::len)
                    .ok_or_else(|| ParseDiagnostic::error(format!("unknown function '{name}'"), items[1].span()))?;
                if arity != f.len() - 1 {
                    return err(format!("function '{name}' expects {arity} arguments"), items[1].span());
                }
                let mut args = Vec::new();
                for a in &f[1..] {
                    let s = self.sym(a, "an object")?;
                    if !self.is_object(s) {
                        return err(format!("unknown object '{s}'"), a.span());
                    }
                    args.push(s.to_string());
                }
                let v = items[2]
                    .as_sym()
                    .and_then(parse_number)
                    .ok_or_else(|| ParseDiagnostic::error("expected a number", items[2].span()))?;
                self.task.numeric_init.insert(GroundAtom { predicate: name.to_string(), args }, v);
                Ok(())
            }
            Some("not") => {
                self.warn("negative initial facts are implicit and ignored", x.span());
                Ok(())
            }
            _ => {
                let a = self.ground_atom(x)?;
                if self.derived.contains(&a.predicate) {
                    return err(format!("derived predicate '{}' in the initial state", a.predicate), x.span());
                }
                self.task.init.insert(a);
                Ok(())
            }
        }
    }
}

/// `(at start x)`, `(at end x)`, `(at <number> x)` or `(over all x)`, as opposed
/// to an atom of a predicate named `at` or `over`.
fn is_timed(e: &SExpr) -> bool {
    let Some(items) = e.as_list() else { return false };
    if items.len() != 3 || items[2].as_list().is_none() {
        return false;
    }
    match (items[0].as_sym(), items[1].as_sym()) {
        (Some("at"), Some(t)) => t == "start" || t == "end" || parse_number(t).is_some(),
        (Some("over"), Some("all")) => true,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const AIRPORT: &str = "(define (domain airport)
 (:requirements :adl)
 (:types airplane airplanetype direction segment)
 (:predicates (has-type ?a - airplane ?t - airplanetype) (is-moving ?a - airplane)
   (facing ?a - airplane ?d - direction) (can-move ?s1 ?s2 - segment ?d - direction)
   (move-dir ?s1 ?s2 - segment ?d - direction) (at-segment ?a - airplane ?s - segment)
   (blocked ?s - segment ?a - airplane) (is-blocked ?s1 - segment ?t - airplanetype ?s2 - segment ?d - direction)
   (occupied ?s - segment))
 (:action move
  :parameters
  (?a - airplane ?t - airplanetype ?d1 - direction ?s1 ?s2  - segment ?d2 - direction)
  :precondition
   (and (has-type ?a ?t) (is-moving ?a) (not (= ?s1 ?s2)) (facing ?a ?d1) (can-move ?s1 ?s2 ?d1)
        (move-dir ?s1 ?s2 ?d2) (at-segment ?a ?s1)
        (not (exists (?a1 - airplane) (and (not (= ?a1 ?a)) (blocked ?s2 ?a1))))
        (forall (?s - segment)  (imply  (and  (is-blocked ?s ?t ?s2 ?d2) (not (= ?s ?s1))) (not (occupied ?s)))))
  :effect
   (and (occupied ?s2) (blocked ?s2 ?a) (not (occupied ?s1)) (not (at-segment ?a ?s1)) (at-segment ?a ?s2)
        (when   (not (is-blocked ?s1 ?t ?s2 ?d2)) (not (blocked ?s1 ?a)))
        (when   (not (= ?d1 ?d2)) (and (not (facing ?a ?d1)) (facing ?a ?d2)))
        (forall (?s - segment)  (when   (is-blocked ?s ?t ?s2 ?d2) (blocked ?s ?a)))
        (forall (?s - segment) (when
           (and  (is-blocked ?s ?t ?s1 ?d1) (not (= ?s ?s2)) (not (is-blocked ?s ?t ?s2 ?d2)))
           (not (blocked ?s ?a))))))
)";

    #[test]
    fn airport_move_operator() {
        let p = parse_domain(AIRPORT).unwrap();
        let op = p.task.operator("move").unwrap();
        assert_eq!(op.parameters.len(), 6);
        let quantified = match &op.precondition {
            Formula::And(parts) => parts
                .iter()
                .filter(|f| match f {
                    Formula::Forall(..) | Formula::Exists(..) => true,
                    Formula::Not(g) => matches!(**g, Formula::Exists(..) | Formula::Forall(..)),
                    _ => false,
                })
                .count(),
            _ => 0,
        };
        assert_eq!(quantified, 2);
        let conditional = op.effects.iter().filter(|e| !e.is_unconditional()).count();
        assert_eq!(conditional, 4);
        assert_eq!(op.effects[0].adds.len(), 3);
        assert_eq!(op.effects[0].deletes.len(), 2);
        assert!(p.diagnostics.is_empty(), "{:?}", p.diagnostics);
    }

    #[test]
    fn trans_rule() {
        let d = "(define (domain g) (:requirements :derived-predicates :existential-preconditions)
          (:predicates (edge ?x ?y) (trans ?x ?y))
          (:derived (trans ?x ?y) (or (edge ?x ?y ) (exists (?z) (and (edge ?x ?z) (trans ?z ?y))))))";
        let p = parse_domain(d).unwrap();
        let r = &p.task.derivation_rules[0];
        assert_eq!(r.head.predicate, "trans");
        assert_eq!(r.head.args.len(), 2);
        assert_eq!(r.parameters.len(), 2);
    }

    const BAR: &str = "(define (domain bar) (:requirements :durative-actions :timed-initial-literals :negative-preconditions)
      (:predicates (have-to-work) (bar-open) (at-bar))
      (:durative-action drink :parameters () :duration (= ?duration 23)
        :condition (over all (bar-open)) :effect (at end (at-bar))))";

    #[test]
    fn constant_duration() {
        let p = parse_domain(BAR).unwrap();
        let d = p.task.operators[0].durative.as_ref().unwrap();
        assert_eq!(d.duration, DurationExpr::Const(Rational::from_integer(23)));
    }

    #[test]
    fn timed_literals_in_init() {
        let d = parse_domain(BAR).unwrap().task;
        let prob = "(define (problem p) (:domain bar)
          (:init
            (at 9  (have-to-work))
            (at 19 (not (have-to-work)))
            (at 19 (bar-open))
            (at 23 (not (bar-open))))
          (:goal (at-bar)))";
        let t = parse_problem(prob, &d).unwrap().task;
        let times: Vec<i64> = t.timed_literals.iter().map(|l| l.time.to_integer()).collect();
        assert_eq!(times, vec![9, 19, 19, 23]);
        assert!(!t.timed_literals[1].positive);
    }

    #[test]
    fn empty_goal_is_true() {
        let d = parse_domain("(define (domain x) (:predicates (p)))").unwrap().task;
        let t = parse_problem("(define (problem y) (:domain x) (:init) (:goal (and)))", &d)
            .unwrap()
            .task;
        assert!(t.goal.is_true());
    }

    #[test]
    fn undeclared_object_type_rejected() {
        let d = parse_domain("(define (domain x) (:requirements :typing) (:types a) (:predicates (p ?x - a)))")
            .unwrap()
            .task;
        let text = "(define (problem y) (:domain x) (:objects o - zork) (:init) (:goal (and)))";
        let e = parse_problem(text, &d).unwrap_err();
        let span = e.first_error().span;
        assert_eq!(&text[span.offset..span.offset + span.len], "o");
        assert!(e.first_error().message.contains("zork"));
    }

    #[test]
    fn unsupported_requirement_named() {
        let text = "(define (domain x) (:requirements :strips :numeric-fluents))";
        let e = parse_domain(text).unwrap_err();
        let d = e.first_error();
        assert!(d.message.contains(":numeric-fluents"));
        assert_eq!(&text[d.span.offset..d.span.offset + d.span.len], ":numeric-fluents");
    }

    #[test]
    fn numeric_effect_rejected_with_span() {
        let text = "(define (domain x) (:predicates (p))
           (:action a :parameters () :precondition (p) :effect (increase (total-cost) 1)))";
        let e = parse_domain(text).unwrap_err();
        let d = e.first_error();
        assert!(text[d.span.offset..].starts_with("(increase"));
    }

    #[test]
    fn equality_and_derived_in_effects_rejected() {
        let eq = "(define (domain x) (:requirements :equality) (:predicates (p ?x))
           (:action a :parameters (?x ?y) :effect (= ?x ?y)))";
        assert!(parse_domain(eq).is_err());
        let dp = "(define (domain x) (:requirements :derived-predicates) (:predicates (p) (q))
           (:derived (q) (p)) (:action a :parameters () :effect (q)))";
        let e = parse_domain(dp).unwrap_err();
        assert!(e.first_error().message.contains("derived"));
    }

    #[test]
    fn unbound_variable_rejected() {
        let text = "(define (domain x) (:predicates (p ?x))
           (:action a :parameters () :precondition (p ?y)))";
        let e = parse_domain(text).unwrap_err();
        let d = e.first_error();
        assert_eq!(&text[d.span.offset..d.span.offset + d.span.len], "?y");
    }

    #[test]
    fn redundant_flag_warns() {
        let p = parse_domain("(define (domain x) (:requirements :adl :equality) (:predicates (p)))").unwrap();
        assert_eq!(p.diagnostics.len(), 1);
        assert!(!p.diagnostics[0].is_error());
    }

    #[test]
    fn til_at_non_positive_time() {
        let d = parse_domain(BAR).unwrap().task;
        let prob = "(define (problem p) (:domain bar) (:init (at 0 (bar-open))) (:goal (and)))";
        assert!(parse_problem(prob, &d).is_err());
    }

    #[test]
    fn action_keyword_with_duration_is_durative() {
        let d = "(define (domain w) (:requirements :durative-actions) (:predicates (no-wrapper) (wrapper-active))
          (:action wrapper :parameters () :duration (= ?duration 23) :condition (at start (no-wrapper))
           :effect (and (at start (not (no-wrapper))) (at start (wrapper-active)) (at end (not (wrapper-active))))))";
        let p = parse_domain(d).unwrap();
        let op = &p.task.operators[0];
        let dur = op.durative.as_ref().unwrap();
        assert_eq!(dur.start_effects.len(), 1);
        assert_eq!(dur.start_effects[0].adds.len(), 1);
        assert_eq!(op.effects[0].deletes.len(), 1);
        assert_eq!(p.diagnostics.len(), 1);
    }
}

