//! Canonical PDDL output.

use std::fmt::Write;

use crate::model::rational::format_number;
use crate::model::{
    Atom, ConditionalEffect, DurationExpr, Formula, LiftedTask, Metric, TypedVar, OBJECT_TYPE,
};

/// Domain and problem text of one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrintedTask {
    pub domain: String,
    pub problem: String,
}

pub fn print_task(t: &LiftedTask) -> PrintedTask {
    PrintedTask {
        domain: print_domain(t),
        problem: print_problem(t),
    }
}

struct Printer {
    typed: bool,
}

impl Printer {
    fn for_task(t: &LiftedTask) -> Self {
        let r = &t.requirements;
        Printer {
            typed: r.contains(":typing") || r.contains(":adl"),
        }
    }

    fn vars(&self, vs: &[TypedVar]) -> String {
        let mut s = String::new();
        for (i, v) in vs.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "?{}", v.name);
            if self.typed || v.ty != OBJECT_TYPE {
                let _ = write!(s, " - {}", v.ty);
            }
        }
        s
    }

    fn named(&self, name: &str, ty: &str) -> String {
        if self.typed || ty != OBJECT_TYPE {
            format!("{name} - {ty}")
        } else {
            name.to_string()
        }
    }

    fn formula(&self, f: &Formula) -> String {
        let mut s = String::new();
        self.write_formula(&mut s, f);
        s
    }

    fn write_formula(&self, s: &mut String, f: &Formula) {
        match f {
            Formula::Atom(a) => {
                let _ = write!(s, "{a}");
            }
            Formula::Not(g) => {
                s.push_str("(not ");
                self.write_formula(s, g);
                s.push(')');
            }
            Formula::And(gs) | Formula::Or(gs) => {
                s.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
                for g in gs {
                    s.push(' ');
                    self.write_formula(s, g);
                }
                s.push(')');
            }
            Formula::Imply(a, b) => {
                s.push_str("(imply ");
                self.write_formula(s, a);
                s.push(' ');
                self.write_formula(s, b);
                s.push(')');
            }
            Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
                let kw = if matches!(f, Formula::Forall(..)) { "forall" } else { "exists" };
                let _ = write!(s, "({kw} ({}) ", self.vars(vs));
                self.write_formula(s, g);
                s.push(')');
            }
        }
    }

    fn literals(adds: &[Atom], dels: &[Atom]) -> Vec<String> {
        adds.iter()
            .map(|a| a.to_string())
            .chain(dels.iter().map(|a| format!("(not {a})")))
            .collect()
    }

    fn conj(items: Vec<String>) -> String {
        if items.len() == 1 {
            items.into_iter().next().unwrap()
        } else {
            format!("(and{})", items.iter().map(|i| format!(" {i}")).collect::<String>())
        }
    }

    /// Effect items of a classical operator.
    fn effect_items(&self, effects: &[ConditionalEffect]) -> Vec<String> {
        let mut out = Vec::new();
        for e in effects {
            let lits = Self::literals(&e.adds, &e.deletes);
            if lits.is_empty() {
                continue;
            }
            if e.is_unconditional() {
                out.extend(lits);
                continue;
            }
            let mut body = Self::conj(lits);
            if !e.condition.is_true() {
                body = format!("(when {} {body})", self.formula(&e.condition));
            }
            if !e.params.is_empty() {
                body = format!("(forall ({}) {body})", self.vars(&e.params));
            }
            out.push(body);
        }
        out
    }

    fn timed_effect_items(&self, effects: &[ConditionalEffect], time: &str) -> Vec<String> {
        let mut out = Vec::new();
        for e in effects {
            let lits = Self::literals(&e.adds, &e.deletes);
            if lits.is_empty() {
                continue;
            }
            if e.is_unconditional() {
                out.extend(lits.into_iter().map(|l| format!("(at {time} {l})")));
                continue;
            }
            let mut body = format!("(at {time} {})", Self::conj(lits));
            if !e.condition.is_true() {
                body = format!("(when (at start {}) {body})", self.formula(&e.condition));
            }
            if !e.params.is_empty() {
                body = format!("(forall ({}) {body})", self.vars(&e.params));
            }
            out.push(body);
        }
        out
    }
}

pub fn print_domain(t: &LiftedTask) -> String {
    let p = Printer::for_task(t);
    let mut s = String::new();
    let _ = writeln!(s, "(define (domain {})", t.domain_name);
    if !t.requirements.is_empty() {
        let reqs: Vec<&str> = t.requirements.iter().map(String::as_str).collect();
        let _ = writeln!(s, "  (:requirements {})", reqs.join(" "));
    }
    if !t.types.is_empty() {
        s.push_str("  (:types");
        for (child, parent) in &t.types {
            let _ = write!(s, "\n    {child} - {parent}");
        }
        s.push_str(")\n");
    }
    if !t.constants.is_empty() {
        s.push_str("  (:constants");
        for (c, ty) in &t.constants {
            let _ = write!(s, "\n    {}", p.named(c, ty));
        }
        s.push_str(")\n");
    }
    s.push_str("  (:predicates");
    for (name, params) in &t.predicates {
        let _ = write!(s, "\n    ({name}");
        if !params.is_empty() {
            let _ = write!(s, " {}", p.vars(params));
        }
        s.push(')');
    }
    s.push_str(")\n");
    if !t.functions.is_empty() {
        s.push_str("  (:functions");
        for (name, params) in &t.functions {
            let _ = write!(s, "\n    ({name}");
            if !params.is_empty() {
                let _ = write!(s, " {}", p.vars(params));
            }
            s.push(')');
        }
        s.push_str(")\n");
    }
    for r in &t.derivation_rules {
        let mut head = format!("({}", r.head.predicate);
        for a in &r.head.args {
            match a {
                crate::model::Term::Var(v) => {
                    let tv = r.parameters.iter().find(|x| &x.name == v).expect("head variable typed");
                    let _ = write!(head, " {}", p.vars(std::slice::from_ref(tv)));
                }
                crate::model::Term::Const(c) => {
                    let _ = write!(head, " {c}");
                }
            }
        }
        head.push(')');
        let _ = writeln!(s, "  (:derived {head}\n    {})", p.formula(&r.body));
    }
    for op in &t.operators {
        match &op.durative {
            None => {
                let _ = writeln!(s, "  (:action {}", op.name);
                let _ = writeln!(s, "    :parameters ({})", p.vars(&op.parameters));
                let _ = writeln!(s, "    :precondition {}", p.formula(&op.precondition));
                let items = p.effect_items(&op.effects);
                let _ = writeln!(s, "    :effect {})", Printer::conj_or_empty(items));
            }
            Some(d) => {
                let _ = writeln!(s, "  (:durative-action {}", op.name);
                let _ = writeln!(s, "    :parameters ({})", p.vars(&op.parameters));
                let dur = match &d.duration {
                    DurationExpr::Const(r) => format_number(r),
                    DurationExpr::Function(a) => a.to_string(),
                };
                let _ = writeln!(s, "    :duration (= ?duration {dur})");
                let mut conds = Vec::new();
                for (kw, f) in [("at start", &op.precondition), ("over all", &d.over_all), ("at end", &d.at_end)] {
                    if !f.is_true() {
                        conds.push(format!("({kw} {})", p.formula(f)));
                    }
                }
                let _ = writeln!(s, "    :condition {}", Printer::conj_or_empty(conds));
                let mut items = p.timed_effect_items(&d.start_effects, "start");
                items.extend(p.timed_effect_items(&op.effects, "end"));
                let _ = writeln!(s, "    :effect {})", Printer::conj_or_empty(items));
            }
        }
    }
    s.push_str(")\n");
    s
}

impl Printer {
    fn conj_or_empty(items: Vec<String>) -> String {
        if items.is_empty() {
            "(and)".to_string()
        } else {
            Self::conj(items)
        }
    }
}

pub fn print_problem(t: &LiftedTask) -> String {
    let p = Printer::for_task(t);
    let mut s = String::new();
    let _ = writeln!(s, "(define (problem {})", t.instance_name());
    let _ = writeln!(s, "  (:domain {})", t.domain_name);
    s.push_str("  (:objects");
    for (o, ty) in &t.objects {
        let _ = write!(s, "\n    {}", p.named(o, ty));
    }
    s.push_str(")\n  (:init");
    for a in &t.init {
        let _ = write!(s, "\n    {a}");
    }
    for (f, v) in &t.numeric_init {
        let _ = write!(s, "\n    (= {f} {})", format_number(v));
    }
    for tl in &t.timed_literals {
        let lit = if tl.positive {
            tl.atom.to_string()
        } else {
            format!("(not {})", tl.atom)
        };
        let _ = write!(s, "\n    (at {} {lit})", format_number(&tl.time));
    }
    s.push_str(")\n");
    let _ = write!(s, "  (:goal {})", p.formula(&t.goal));
    if let Some(Metric::Makespan) = t.metric {
        s.push_str("\n  (:metric minimize (total-time))");
    }
    s.push_str(")\n");
    s
}
