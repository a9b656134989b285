//! Replacement of negated atoms by positive complement atoms `not-<pred>`.

use std::collections::{BTreeMap, BTreeSet};

use super::formula::{enumerate, to_nnf};
use super::NormalizeError;
use crate::model::{
    Atom, Condition, ConditionalEffect, FactId, Formula, GroundAtom, GroundTask, LiftedTask,
    TimedLiteral, EQUALITY,
};

pub fn negated_name(predicate: &str) -> String {
    format!("not-{predicate}")
}

/// Predicates occurring under a negation in an NNF formula, except `=` and the
/// `exempt` ones.
pub fn negated_predicates(f: &Formula, exempt: &BTreeSet<String>, out: &mut BTreeSet<String>) {
    f.visit_literals(&mut |a, positive| {
        if !positive && a.predicate != EQUALITY && !exempt.contains(&a.predicate) {
            out.insert(a.predicate.clone());
        }
    });
}

/// Rewrite `(not (p ...))` into `(not-p ...)` for every `p` in `negated`.
pub fn compile_negations_formula(f: &Formula, negated: &BTreeSet<String>) -> Formula {
    match f {
        Formula::Not(g) => match &**g {
            Formula::Atom(a) if negated.contains(&a.predicate) => {
                Formula::Atom(Atom::new(&negated_name(&a.predicate), a.args.clone()))
            }
            _ => Formula::not(compile_negations_formula(g, negated)),
        },
        Formula::Atom(_) => f.clone(),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| compile_negations_formula(g, negated)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| compile_negations_formula(g, negated)).collect()),
        Formula::Imply(a, b) => Formula::Imply(
            Box::new(compile_negations_formula(a, negated)),
            Box::new(compile_negations_formula(b, negated)),
        ),
        Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(compile_negations_formula(g, negated))),
        Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(compile_negations_formula(g, negated))),
    }
}

fn mirror(e: &mut ConditionalEffect, negated: &BTreeSet<String>) {
    let mut new_adds = Vec::new();
    let mut new_dels = Vec::new();
    for d in &e.deletes {
        if negated.contains(&d.predicate) && !e.adds.contains(d) {
            new_adds.push(Atom::new(&negated_name(&d.predicate), d.args.clone()));
        }
    }
    for a in &e.adds {
        if negated.contains(&a.predicate) {
            new_dels.push(Atom::new(&negated_name(&a.predicate), a.args.clone()));
        }
    }
    e.adds.extend(new_adds);
    e.deletes.extend(new_dels);
}

/// Lifted negation compilation. Formulas are brought into NNF first. Derived
/// predicates keep their negations: their complements cannot be maintained by
/// effects.
pub fn compile_negations(t: &LiftedTask) -> Result<LiftedTask, NormalizeError> {
    let mut out = t.clone();
    let derived = t.derived_predicates();
    let mut negated = BTreeSet::new();
    {
        let mut visit = |f: &mut Formula| {
            *f = to_nnf(f);
            negated_predicates(f, &derived, &mut negated);
        };
        for op in &mut out.operators {
            visit(&mut op.precondition);
            if let Some(d) = &mut op.durative {
                visit(&mut d.over_all);
                visit(&mut d.at_end);
                for e in &mut d.start_effects {
                    visit(&mut e.condition);
                }
            }
            for e in &mut op.effects {
                visit(&mut e.condition);
            }
        }
        for r in &mut out.derivation_rules {
            visit(&mut r.body);
        }
        visit(&mut out.goal);
    }
    if negated.is_empty() {
        return Ok(out);
    }
    for p in &negated {
        let n = negated_name(p);
        if t.predicates.contains_key(&n) {
            return Err(NormalizeError::NameCollision(n));
        }
    }
    let rewrite = |f: &mut Formula| *f = compile_negations_formula(f, &negated);
    for op in &mut out.operators {
        rewrite(&mut op.precondition);
        if let Some(d) = &mut op.durative {
            rewrite(&mut d.over_all);
            rewrite(&mut d.at_end);
            for e in &mut d.start_effects {
                rewrite(&mut e.condition);
                mirror(e, &negated);
            }
        }
        for e in &mut op.effects {
            rewrite(&mut e.condition);
            mirror(e, &negated);
        }
    }
    for r in &mut out.derivation_rules {
        rewrite(&mut r.body);
    }
    rewrite(&mut out.goal);
    let objects = t.object_table();
    for p in &negated {
        let params = t.predicates[p].clone();
        let n = negated_name(p);
        let domains: Vec<Vec<String>> = params.iter().map(|v| objects.objects_of(&v.ty)).collect();
        enumerate(&domains, 0, &mut Vec::new(), &mut |tuple| {
            let args = tuple.to_vec();
            let atom = GroundAtom { predicate: p.clone(), args: args.clone() };
            if !t.init.contains(&atom) {
                out.init.insert(GroundAtom { predicate: n.clone(), args });
            }
        });
        out.predicates.insert(n, params);
    }
    let mut tls = Vec::new();
    for tl in &t.timed_literals {
        tls.push(tl.clone());
        if negated.contains(&tl.atom.predicate) {
            tls.push(TimedLiteral {
                time: tl.time,
                atom: GroundAtom {
                    predicate: negated_name(&tl.atom.predicate),
                    args: tl.atom.args.clone(),
                },
                positive: !tl.positive,
            });
        }
    }
    out.timed_literals = tls;
    Ok(out)
}

/// Ground negation compilation: complements are created only for facts that occur
/// negated somewhere. Negated derived facts are left alone.
///
/// Within one effect an atom both added and deleted ends up true, so its
/// complement is only deleted. Conflicts between different conditional effects of
/// one action are not reconciled; compile conditional effects away first.
pub fn compile_negations_ground(g: &GroundTask) -> Result<GroundTask, NormalizeError> {
    let derived = g.derived_facts();
    let mut negated: BTreeSet<FactId> = BTreeSet::new();
    let mut collect = |c: &Condition| {
        for f in &c.neg {
            if !derived.contains(f) {
                negated.insert(*f);
            }
        }
    };
    for a in &g.actions {
        collect(&a.precondition);
        for e in &a.effects {
            collect(&e.condition);
        }
    }
    for r in &g.rules {
        collect(&r.body);
    }
    collect(&g.goal);
    if negated.is_empty() {
        return Ok(g.clone());
    }
    let mut out = g.clone();
    let predicates: BTreeSet<&str> = g.facts.iter().map(|(_, a)| a.predicate.as_str()).collect();
    let mut complement: BTreeMap<FactId, FactId> = BTreeMap::new();
    for &f in &negated {
        let atom = g.facts.atom(f);
        let name = negated_name(&atom.predicate);
        if predicates.contains(name.as_str()) {
            return Err(NormalizeError::NameCollision(name));
        }
        let id = out.facts.intern(GroundAtom { predicate: name, args: atom.args.clone() });
        complement.insert(f, id);
    }
    let init: BTreeSet<FactId> = g.init.iter().copied().collect();
    for (&f, &nf) in &complement {
        if !init.contains(&f) {
            out.init.push(nf);
        }
    }
    let rewrite = |c: &Condition| {
        let mut pos = c.pos.clone();
        let mut neg = Vec::new();
        for f in &c.neg {
            match complement.get(f) {
                Some(&nf) => pos.push(nf),
                None => neg.push(*f),
            }
        }
        Condition::new(pos, neg)
    };
    for a in &mut out.actions {
        a.precondition = rewrite(&a.precondition);
        for e in &mut a.effects {
            e.condition = rewrite(&e.condition);
            let mut adds = e.adds.clone();
            let mut dels = e.dels.clone();
            for d in &e.dels {
                if let Some(&nf) = complement.get(d) {
                    if !e.adds.contains(d) {
                        adds.push(nf);
                    }
                }
            }
            for x in &e.adds {
                if let Some(&nf) = complement.get(x) {
                    dels.push(nf);
                }
            }
            e.adds = adds;
            e.dels = dels;
            e.normalize();
        }
    }
    for r in &mut out.rules {
        r.body = rewrite(&r.body);
    }
    out.goal = rewrite(&out.goal);
    Ok(out)
}
