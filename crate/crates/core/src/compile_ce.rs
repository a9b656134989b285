//! Elimination of conditional effects from ground tasks.
//!
//! Two methods are provided. Outcome enumeration replaces an action with `k`
//! distinct effect conditions by one copy per combination of fired effects.
//! The evaluation phase adds trial actions, one per effect and run in a fixed
//! order, after every application of the original action. This keeps the task
//! linear in `k` but lengthens plans.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Condition, FactId, GroundAction, GroundAtom, GroundEffect, GroundTask};
use crate::normalize::{compile_negations_ground, NormalizeError};

/// Default per-action cap on distinct conditional effects for enumeration.
pub const DEFAULT_CE_CAP: usize = 12;

pub const NORMAL: &str = "normal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CeMethod {
    Enumerate,
    EvaluationPhase,
    /// Enumerate where the cap allows, evaluation phase elsewhere.
    Auto,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CeError {
    #[error("action {action} has {effects} distinct conditional effects, more than the cap of {cap}")]
    TooManyEffects { action: String, effects: usize, cap: usize },
    #[error("generated name '{0}' collides with an existing name")]
    NameCollision(String),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CeCompilationStats {
    pub method: CeMethod,
    pub input_actions: usize,
    pub output_actions: usize,
    pub new_facts: usize,
    /// Largest number of distinct conditional effects of a single input action.
    pub max_effects: usize,
    /// Input actions compiled by the evaluation phase.
    pub phase_compiled: usize,
}

/// Conditional effects of `a` with equal conditions merged, in first-seen order.
pub fn distinct_conditional_effects(a: &GroundAction) -> Vec<GroundEffect> {
    let mut out: Vec<GroundEffect> = Vec::new();
    for e in a.conditional_effects() {
        match out.iter_mut().find(|x| x.condition == e.condition) {
            Some(x) => {
                x.adds.extend(&e.adds);
                x.dels.extend(&e.dels);
                x.normalize();
            }
            None => out.push(e.clone()),
        }
    }
    out
}

/// Mutually exclusive conjunctions covering the negation of a condition:
/// `¬l1`, `l1 ∧ ¬l2`, `l1 ∧ l2 ∧ ¬l3`, ...
fn negation_chain(c: &Condition) -> Vec<Condition> {
    let lits: Vec<(FactId, bool)> = c
        .pos
        .iter()
        .map(|&f| (f, true))
        .chain(c.neg.iter().map(|&f| (f, false)))
        .collect();
    let mut out = Vec::new();
    for i in 0..lits.len() {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (j, &(f, positive)) in lits[..=i].iter().enumerate() {
            let keep = if j == i { !positive } else { positive };
            if keep {
                pos.push(f);
            } else {
                neg.push(f);
            }
        }
        out.push(Condition::new(pos, neg));
    }
    out
}

fn enumerate_action(a: &GroundAction, effects: &[GroundEffect]) -> Vec<GroundAction> {
    // Each partial entry: (precondition, fired effect mask).
    let mut partial: Vec<(Condition, Vec<bool>)> = vec![(a.precondition.clone(), Vec::new())];
    for e in effects {
        let mut next = Vec::new();
        let negs = negation_chain(&e.condition);
        for (pre, mask) in &partial {
            let fired = pre.conjoin(&e.condition);
            if !fired.is_contradictory() {
                let mut m = mask.clone();
                m.push(true);
                next.push((fired, m));
            }
            for n in &negs {
                let p = pre.conjoin(n);
                if !p.is_contradictory() {
                    let mut m = mask.clone();
                    m.push(false);
                    next.push((p, m));
                }
            }
        }
        partial = next;
    }
    let base = &a.effects[0];
    partial
        .into_iter()
        .enumerate()
        .map(|(j, (pre, mask))| {
            let mut adds: BTreeSet<FactId> = base.adds.iter().copied().collect();
            let mut dels: BTreeSet<FactId> = base.dels.iter().copied().collect();
            for (e, &on) in effects.iter().zip(&mask) {
                if on {
                    adds.extend(&e.adds);
                    dels.extend(&e.dels);
                }
            }
            let dels: Vec<FactId> = dels.difference(&adds).copied().collect();
            let mut c = GroundAction::new(
                &format!("{}-ce{}", a.op, j + 1),
                a.args.clone(),
                pre,
                GroundEffect::unconditional(adds.into_iter().collect(), dels),
            );
            c.duration = a.duration;
            c.origin = Some(a.origin.clone().unwrap_or_else(|| a.signature()));
            c.bookkeeping = a.bookkeeping;
            c
        })
        .collect()
}

/// Replace every action with conditional effects by one copy per combination of
/// effect outcomes. Copies whose precondition is syntactically contradictory are
/// not emitted. Fails if an action has more than `cap` distinct conditional
/// effects.
pub fn enumerate_outcomes(g: &GroundTask, cap: usize) -> Result<GroundTask, CeError> {
    let mut out = g.clone();
    out.actions.clear();
    for a in &g.actions {
        let effects = distinct_conditional_effects(a);
        if effects.is_empty() {
            out.actions.push(a.clone());
            continue;
        }
        if effects.len() > cap {
            return Err(CeError::TooManyEffects { action: a.signature(), effects: effects.len(), cap });
        }
        out.actions.extend(enumerate_action(a, &effects));
    }
    Ok(out)
}

fn fresh(g: &mut GroundTask, name: &str) -> Result<FactId, CeError> {
    let id = g
        .add_fresh_fact(GroundAtom::new(name, &[]))
        .ok_or_else(|| CeError::NameCollision(name.to_string()))?;
    g.bookkeeping_facts.insert(id);
    Ok(id)
}

fn phase_action(name: &str, pre: Condition, effect: GroundEffect, origin: &str) -> GroundAction {
    let mut a = GroundAction::new(name, Vec::new(), pre, effect);
    a.origin = Some(origin.to_string());
    a.bookkeeping = true;
    a
}

/// Evaluation-phase compilation of the actions selected by `compile`. The shared
/// fact `normal` holds outside evaluation phases; it starts true, every other
/// action and the goal require it.
fn evaluation_phase(g: &GroundTask, compile: &[bool]) -> Result<GroundTask, CeError> {
    if !compile.iter().any(|&c| c) {
        return Ok(g.clone());
    }
    let mut out = g.clone();
    out.actions.clear();
    let normal = fresh(&mut out, NORMAL)?;
    out.init.push(normal);
    out.goal = out.goal.conjoin(&Condition::positive(vec![normal]));
    let existing: BTreeSet<String> = g.actions.iter().map(|a| a.op.clone()).collect();
    let check = |name: &str| {
        if existing.contains(name) {
            Err(CeError::NameCollision(name.to_string()))
        } else {
            Ok(())
        }
    };
    for (a, &c) in g.actions.iter().zip(compile) {
        let mut main = a.clone();
        main.precondition = main.precondition.conjoin(&Condition::positive(vec![normal]));
        if !c {
            out.actions.push(main);
            continue;
        }
        let effects = distinct_conditional_effects(a);
        let flat = a.flat_name();
        let sig = a.origin.clone().unwrap_or_else(|| a.signature());
        let eval = fresh(&mut out, &format!("evaluate-effects-{flat}"))?;
        main.effects = vec![a.effects[0].clone()];
        main.effects[0].adds.push(eval);
        main.effects[0].dels.push(normal);
        main.effects[0].normalize();
        out.actions.push(main);
        let mut tried = Vec::new();
        for (i, e) in effects.iter().enumerate() {
            let i = i + 1;
            let t = fresh(&mut out, &format!("tried-{flat}-{i}"))?;
            tried.push(t);
            let name = format!("apply-{flat}-{i}");
            check(&name)?;
            let mut eff = GroundEffect::unconditional(e.adds.clone(), e.dels.clone());
            eff.adds.push(t);
            eff.normalize();
            eff.dels.retain(|d| !eff.adds.contains(d));
            // Trials run once each, in a fixed order: effect i waits for tried-(i-1).
            let mut gate = vec![eval];
            gate.extend(tried.len().checked_sub(2).map(|p| tried[p]));
            let pre = e.condition.conjoin(&Condition::new(gate.clone(), vec![t]));
            out.actions.push(phase_action(&name, pre, eff, &sig));
            let lits: Vec<Condition> = e
                .condition
                .pos
                .iter()
                .map(|&f| Condition::new(gate.clone(), vec![t, f]))
                .chain(e.condition.neg.iter().map(|&f| {
                    let mut pos = gate.clone();
                    pos.push(f);
                    Condition::new(pos, vec![t])
                }))
                .collect();
            for (j, pre) in lits.into_iter().enumerate() {
                let name = format!("skip-{flat}-{i}-{}", j + 1);
                check(&name)?;
                out.actions.push(phase_action(&name, pre, GroundEffect::unconditional(vec![t], vec![]), &sig));
            }
        }
        let name = format!("stop-{flat}");
        check(&name)?;
        let mut pre = tried.clone();
        pre.push(eval);
        let mut dels = tried;
        dels.push(eval);
        out.actions.push(phase_action(
            &name,
            Condition::positive(pre),
            GroundEffect::unconditional(vec![normal], dels),
            &sig,
        ));
    }
    Ok(out)
}

/// Evaluation-phase compilation of every action with conditional effects.
pub fn evaluation_phase_compile(g: &GroundTask) -> Result<GroundTask, CeError> {
    let compile: Vec<bool> = g.actions.iter().map(|a| a.conditional_effect_count() > 0).collect();
    evaluation_phase(g, &compile)
}

/// Compile conditional effects away with `method`, then compile negative
/// conditions into complement facts. Without derivation rules the result is
/// pure STRIPS.
pub fn compile_conditional_effects(
    g: &GroundTask,
    method: CeMethod,
    cap: usize,
) -> Result<(GroundTask, CeCompilationStats), CeError> {
    let counts: Vec<usize> = g.actions.iter().map(|a| distinct_conditional_effects(a).len()).collect();
    let phase: Vec<bool> = counts
        .iter()
        .map(|&k| match method {
            CeMethod::Enumerate => false,
            CeMethod::EvaluationPhase => k > 0,
            CeMethod::Auto => k > cap,
        })
        .collect();
    let staged = evaluation_phase(g, &phase)?;
    let compiled = if method == CeMethod::EvaluationPhase {
        staged
    } else {
        enumerate_outcomes(&staged, cap)?
    };
    let out = compile_negations_ground(&compiled)?;
    let stats = CeCompilationStats {
        method,
        input_actions: g.actions.len(),
        output_actions: out.actions.len(),
        new_facts: out.facts.len() - g.facts.len(),
        max_effects: counts.iter().copied().max().unwrap_or(0),
        phase_compiled: phase.iter().filter(|&&p| p).count(),
    };
    Ok((out, stats))
}
