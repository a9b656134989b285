//! Operator and rule instantiation with eager static pruning.

use std::collections::BTreeSet;

use super::{GroundConfig, GroundError};
use crate::model::{
    Atom, Binding, Condition, DurationExpr, FactId, Formula, GroundAction, GroundAtom, GroundEffect,
    GroundRule, GroundTask, LiftedTask, ObjectTable, Rational, TypedVar,
};
use crate::normalize::{
    dnf_disjuncts, enumerate, expand_quantifiers, simplify, to_nnf, StaticInfo, GOAL_ACHIEVER_PREFIX,
    GOAL_REACHED,
};

struct Ctx<'a> {
    task: &'a LiftedTask,
    statics: &'a StaticInfo,
    objects: ObjectTable,
    cfg: &'a GroundConfig,
    g: GroundTask,
}

/// Literals of the top-level conjunction that only mention static predicates.
fn static_literals(f: &Formula, statics: &StaticInfo) -> Vec<(Atom, bool)> {
    let parts: Vec<&Formula> = match f {
        Formula::And(v) => v.iter().collect(),
        other => vec![other],
    };
    parts
        .into_iter()
        .filter_map(|p| match p {
            Formula::Atom(a) if statics.is_static(&a.predicate) => Some((a.clone(), true)),
            Formula::Not(g) => match &**g {
                Formula::Atom(a) if statics.is_static(&a.predicate) => Some((a.clone(), false)),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

/// Enumerate bindings of `params`, smallest domains first, rejecting a partial
/// binding as soon as a fully bound static literal is false.
fn bindings(
    params: &[TypedVar],
    checks: &[(Atom, bool)],
    statics: &StaticInfo,
    objects: &ObjectTable,
    f: &mut dyn FnMut(&Binding) -> Result<(), GroundError>,
) -> Result<(), GroundError> {
    let mut order: Vec<(usize, Vec<String>)> = params
        .iter()
        .enumerate()
        .map(|(i, p)| (i, objects.objects_of(&p.ty)))
        .collect();
    order.sort_by_key(|(i, d)| (d.len(), *i));
    // Depth at which each check becomes fully bound.
    let mut by_depth: Vec<Vec<&(Atom, bool)>> = vec![Vec::new(); order.len() + 1];
    for c in checks {
        let depth = c
            .0
            .variables()
            .map(|v| {
                order
                    .iter()
                    .position(|(i, _)| params[*i].name == v)
                    .map(|k| k + 1)
                    .unwrap_or(usize::MAX)
            })
            .max()
            .unwrap_or(0);
        if depth <= order.len() {
            by_depth[depth].push(c);
        }
    }
    fn ok(checks: &[&(Atom, bool)], b: &Binding, statics: &StaticInfo) -> bool {
        checks.iter().all(|(a, pos)| match statics.evaluate(&a.substitute(b)) {
            Some(v) => v == *pos,
            None => true,
        })
    }
    fn rec(
        depth: usize,
        order: &[(usize, Vec<String>)],
        params: &[TypedVar],
        by_depth: &[Vec<&(Atom, bool)>],
        statics: &StaticInfo,
        b: &mut Binding,
        f: &mut dyn FnMut(&Binding) -> Result<(), GroundError>,
    ) -> Result<(), GroundError> {
        if !ok(&by_depth[depth], b, statics) {
            return Ok(());
        }
        if depth == order.len() {
            return f(b);
        }
        let (pi, dom) = &order[depth];
        let name = &params[*pi].name;
        for c in dom {
            b.insert(name.clone(), c.clone());
            rec(depth + 1, order, params, by_depth, statics, b, f)?;
        }
        b.remove(name);
        Ok(())
    }
    rec(0, &order, params, &by_depth, statics, &mut Binding::new(), f)
}

impl<'a> Ctx<'a> {
    fn fact(&mut self, a: &Atom) -> FactId {
        let g = a.to_ground().expect("atom is ground after binding");
        self.g.facts.intern(g)
    }

    /// Ground DNF of a formula under a binding: one condition per satisfiable disjunct.
    fn conditions(&mut self, f: &Formula, b: &Binding) -> Result<Vec<Condition>, GroundError> {
        let f = expand_quantifiers(&f.substitute(b), &self.objects);
        let f = simplify(&f, self.statics, &Binding::new());
        let ds = dnf_disjuncts(&f, self.cfg.dnf_budget)?;
        let mut out = Vec::new();
        for d in ds {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for l in d {
                match l {
                    Formula::Atom(a) => pos.push(self.fact(&a)),
                    Formula::Not(inner) => match *inner {
                        Formula::Atom(a) => neg.push(self.fact(&a)),
                        other => unreachable!("non-literal leaf {other}"),
                    },
                    other => unreachable!("non-literal leaf {other}"),
                }
            }
            let c = Condition::new(pos, neg);
            if !c.is_contradictory() && !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }

    fn effects(
        &mut self,
        effects: &[crate::model::ConditionalEffect],
        b: &Binding,
    ) -> Result<Vec<GroundEffect>, GroundError> {
        let mut base = GroundEffect::default();
        let mut rest = Vec::new();
        for e in effects {
            let cond = to_nnf(&e.condition);
            let domains: Vec<Vec<String>> = e.params.iter().map(|p| self.objects.objects_of(&p.ty)).collect();
            let mut tuples = Vec::new();
            enumerate(&domains, 0, &mut Vec::new(), &mut |t| tuples.push(t.to_vec()));
            for t in tuples {
                let mut eb = b.clone();
                for (p, c) in e.params.iter().zip(&t) {
                    eb.insert(p.name.clone(), c.clone());
                }
                let conds = self.conditions(&cond, &eb)?;
                let adds: Vec<FactId> = e.adds.iter().map(|a| self.fact(&a.substitute(&eb))).collect();
                let dels: Vec<FactId> = e.deletes.iter().map(|a| self.fact(&a.substitute(&eb))).collect();
                for c in conds {
                    if c.is_empty() {
                        base.adds.extend(&adds);
                        base.dels.extend(&dels);
                    } else {
                        rest.push(GroundEffect { condition: c, adds: adds.clone(), dels: dels.clone() });
                    }
                }
            }
        }
        base.normalize();
        let mut out = vec![base];
        for mut e in rest {
            e.normalize();
            if !out.contains(&e) {
                out.push(e);
            }
        }
        Ok(out)
    }

    fn duration(&self, d: &DurationExpr, b: &Binding) -> Result<Rational, GroundError> {
        match d {
            DurationExpr::Const(r) => Ok(*r),
            DurationExpr::Function(a) => {
                let g = a.substitute(b).to_ground().expect("bound");
                self.task
                    .numeric_init
                    .get(&g)
                    .copied()
                    .ok_or_else(|| GroundError::MissingDuration(g.to_string()))
            }
        }
    }

    fn push_action(&mut self, a: GroundAction) -> Result<(), GroundError> {
        if self.g.actions.len() >= self.cfg.action_cap {
            return Err(GroundError::Cap { what: "ground actions", limit: self.cfg.action_cap });
        }
        self.g.actions.push(a);
        Ok(())
    }

    fn operators(&mut self) -> Result<(), GroundError> {
        for op in &self.task.operators {
            let (pre, effects) = match &op.durative {
                None => (to_nnf(&op.precondition), op.effects.clone()),
                Some(d) => {
                    let pre = Formula::And(vec![op.precondition.clone(), d.over_all.clone(), d.at_end.clone()]);
                    let mut effs = d.start_effects.clone();
                    effs.extend(op.effects.iter().cloned());
                    (to_nnf(&pre), effs)
                }
            };
            let checks = static_literals(&pre, self.statics);
            let mut found: Vec<Binding> = Vec::new();
            bindings(&op.parameters, &checks, self.statics, &self.objects, &mut |b| {
                found.push(b.clone());
                if found.len() > self.cfg.action_cap {
                    return Err(GroundError::Cap { what: "ground actions", limit: self.cfg.action_cap });
                }
                Ok(())
            })?;
            for b in found {
                let conds = self.conditions(&pre, &b)?;
                if conds.is_empty() {
                    continue;
                }
                let effs = self.effects(&effects, &b)?;
                let duration = match &op.durative {
                    Some(d) => Some(self.duration(&d.duration, &b)?),
                    None => None,
                };
                let args: Vec<String> = op.parameters.iter().map(|p| b[&p.name].clone()).collect();
                let multi = conds.len() > 1;
                for (i, c) in conds.into_iter().enumerate() {
                    let name = if multi { format!("{}-dnf{}", op.name, i + 1) } else { op.name.clone() };
                    let mut a = GroundAction::new(&name, args.clone(), c, GroundEffect::default());
                    a.effects = effs.clone();
                    a.duration = duration;
                    self.push_action(a)?;
                }
            }
        }
        Ok(())
    }

    fn rules(&mut self) -> Result<(), GroundError> {
        for r in &self.task.derivation_rules {
            let body = to_nnf(&r.body);
            let checks = static_literals(&body, self.statics);
            let mut found = Vec::new();
            bindings(&r.parameters, &checks, self.statics, &self.objects, &mut |b| {
                found.push(b.clone());
                Ok(())
            })?;
            for b in found {
                let conds = self.conditions(&body, &b)?;
                if conds.is_empty() {
                    continue;
                }
                let head = self.fact(&r.head.substitute(&b));
                for c in conds {
                    let rule = GroundRule { head, body: c };
                    if !self.g.rules.contains(&rule) {
                        self.g.rules.push(rule);
                    }
                }
            }
        }
        Ok(())
    }

    fn goal(&mut self) -> Result<(), GroundError> {
        let goal = to_nnf(&self.task.goal);
        let conds = self.conditions(&goal, &Binding::new())?;
        if conds.len() == 1 {
            self.g.goal = conds.into_iter().next().unwrap();
            return Ok(());
        }
        let reached = GroundAtom::new(GOAL_REACHED, &[]);
        if self.task.predicates.contains_key(GOAL_REACHED) {
            return Err(crate::normalize::NormalizeError::NameCollision(GOAL_REACHED.into()).into());
        }
        let r = self.g.facts.intern(reached);
        for (i, c) in conds.into_iter().enumerate() {
            let name = format!("{GOAL_ACHIEVER_PREFIX}{}", i + 1);
            self.push_action(GroundAction::new(&name, vec![], c, GroundEffect::unconditional(vec![r], vec![])))?;
        }
        self.g.goal = Condition::positive(vec![r]);
        Ok(())
    }
}

/// Ground every operator, rule and the goal of `t`.
pub fn instantiate(t: &LiftedTask, statics: &StaticInfo, cfg: &GroundConfig) -> Result<GroundTask, GroundError> {
    let mut ctx = Ctx {
        task: t,
        statics,
        objects: t.object_table(),
        cfg,
        g: GroundTask::new(t.instance_name(), &t.domain_name),
    };
    let mut init = Vec::new();
    let mut static_facts = BTreeSet::new();
    for a in &t.init {
        let id = ctx.g.facts.intern(a.clone());
        init.push(id);
        if statics.is_static(&a.predicate) {
            static_facts.insert(id);
        }
    }
    ctx.g.init = init;
    ctx.g.static_facts = static_facts.into_iter().collect();
    ctx.operators()?;
    ctx.rules()?;
    ctx.goal()?;
    Ok(ctx.g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::detect_statics;
    use crate::parser::parse_task;

    #[test]
    fn static_precondition_prunes_bindings() {
        let d = "(define (domain d) (:requirements :typing)
          (:types node)
          (:predicates (edge ?x ?y - node) (at ?x - node))
          (:action go :parameters (?x ?y - node) :precondition (and (at ?x) (edge ?x ?y))
             :effect (and (at ?y) (not (at ?x)))))";
        let p = "(define (problem p) (:domain d) (:objects a b c - node)
          (:init (at a) (edge a b) (edge b c)) (:goal (at c)))";
        let t = parse_task(d, p).unwrap().task;
        let g = instantiate(&t, &detect_statics(&t), &GroundConfig::default()).unwrap();
        let sigs: Vec<String> = g.actions.iter().map(|a| a.signature()).collect();
        assert_eq!(sigs, vec!["(go a b)", "(go b c)"]);
        assert!(g.actions[0].precondition.pos.len() == 1);
    }

    #[test]
    fn unsatisfiable_static_precondition() {
        let d = "(define (domain d) (:predicates (s) (p))
          (:action a :parameters () :precondition (s) :effect (p)))";
        let p = "(define (problem p) (:domain d) (:init) (:goal (p)))";
        let t = parse_task(d, p).unwrap().task;
        let g = instantiate(&t, &detect_statics(&t), &GroundConfig::default()).unwrap();
        assert!(g.actions.is_empty());
    }

    #[test]
    fn action_cap_is_enforced() {
        let d = "(define (domain d) (:predicates (p ?x ?y))
          (:action a :parameters (?x ?y) :effect (p ?x ?y)))";
        let p = "(define (problem p) (:domain d) (:objects a b c d) (:init) (:goal (and)))";
        let t = parse_task(d, p).unwrap().task;
        let cfg = GroundConfig { action_cap: 10, ..GroundConfig::default() };
        assert!(matches!(
            instantiate(&t, &detect_statics(&t), &cfg),
            Err(GroundError::Cap { .. })
        ));
    }
}
