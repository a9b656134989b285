//! Formula rewriting: implication elimination, quantifier expansion, NNF, DNF and
//! truth-value simplification.

use super::{NormalizeError, StaticInfo};
use crate::model::{Binding, Formula, ObjectTable};

pub fn eliminate_imply(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) => f.clone(),
        Formula::Not(g) => Formula::not(eliminate_imply(g)),
        Formula::And(gs) => Formula::And(gs.iter().map(eliminate_imply).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(eliminate_imply).collect()),
        Formula::Imply(a, b) => Formula::Or(vec![Formula::not(eliminate_imply(a)), eliminate_imply(b)]),
        Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(eliminate_imply(g))),
        Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(eliminate_imply(g))),
    }
}

/// Replace every quantifier by the conjunction (forall) or disjunction (exists)
/// of its instances over the objects of the quantified types.
pub fn expand_quantifiers(f: &Formula, objects: &ObjectTable) -> Formula {
    match f {
        Formula::Atom(_) => f.clone(),
        Formula::Not(g) => Formula::not(expand_quantifiers(g, objects)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| expand_quantifiers(g, objects)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| expand_quantifiers(g, objects)).collect()),
        Formula::Imply(a, b) => Formula::Imply(
            Box::new(expand_quantifiers(a, objects)),
            Box::new(expand_quantifiers(b, objects)),
        ),
        Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let mut instances = Vec::new();
            let mut binding = Binding::new();
            let domains: Vec<Vec<String>> = vs.iter().map(|v| objects.objects_of(&v.ty)).collect();
            enumerate(&domains, 0, &mut Vec::new(), &mut |tuple| {
                binding.clear();
                for (v, c) in vs.iter().zip(tuple) {
                    binding.insert(v.name.clone(), c.clone());
                }
                instances.push(expand_quantifiers(&body.substitute(&binding), objects));
            });
            if universal {
                Formula::And(instances)
            } else {
                Formula::Or(instances)
            }
        }
    }
}

/// Call `f` on every tuple of the cross product of `domains`, in lexicographic order.
pub(crate) fn enumerate<T: Clone>(domains: &[Vec<T>], i: usize, cur: &mut Vec<T>, f: &mut impl FnMut(&[T])) {
    if i == domains.len() {
        f(cur);
        return;
    }
    for x in &domains[i] {
        cur.push(x.clone());
        enumerate(domains, i + 1, cur, f);
        cur.pop();
    }
}

/// Push negations down to atoms. Implications are eliminated on the way and
/// quantifiers are dualized.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, true)
}

fn nnf(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::Atom(_) => {
            if positive {
                f.clone()
            } else {
                Formula::not(f.clone())
            }
        }
        Formula::Not(g) => nnf(g, !positive),
        Formula::And(gs) | Formula::Or(gs) => {
            let parts = gs.iter().map(|g| nnf(g, positive)).collect();
            if matches!(f, Formula::And(_)) == positive {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        Formula::Imply(a, b) => {
            let or = Formula::Or(vec![Formula::not((**a).clone()), (**b).clone()]);
            nnf(&or, positive)
        }
        Formula::Forall(vs, g) | Formula::Exists(vs, g) => {
            let body = Box::new(nnf(g, positive));
            if matches!(f, Formula::Forall(..)) == positive {
                Formula::Forall(vs.clone(), body)
            } else {
                Formula::Exists(vs.clone(), body)
            }
        }
    }
}

/// True when negation occurs only directly above atoms and no implication remains.
pub fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) => true,
        Formula::Not(g) => matches!(**g, Formula::Atom(_)),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().all(is_nnf),
        Formula::Imply(..) => false,
        Formula::Forall(_, g) | Formula::Exists(_, g) => is_nnf(g),
    }
}

/// A DNF leaf: a literal, or a quantified subformula kept opaque.
fn is_leaf(f: &Formula) -> bool {
    matches!(f, Formula::Atom(_) | Formula::Not(_) | Formula::Forall(..) | Formula::Exists(..))
}

/// Number of disjuncts the distributive DNF of an NNF formula would have.
pub fn projected_disjuncts(f: &Formula) -> u128 {
    match f {
        Formula::And(gs) => gs
            .iter()
            .map(projected_disjuncts)
            .fold(1u128, |a, b| a.saturating_mul(b)),
        Formula::Or(gs) => gs
            .iter()
            .map(projected_disjuncts)
            .fold(0u128, |a, b| a.saturating_add(b)),
        Formula::Imply(a, b) => projected_disjuncts(&Formula::Or(vec![
            to_nnf(&Formula::not((**a).clone())),
            (**b).clone(),
        ])),
        _ => 1,
    }
}

/// The disjuncts of the DNF of an NNF formula, each a list of leaves.
pub fn dnf_disjuncts(f: &Formula, budget: u128) -> Result<Vec<Vec<Formula>>, NormalizeError> {
    let projected = projected_disjuncts(f);
    if projected > budget {
        return Err(NormalizeError::DnfBlowup { projected, budget });
    }
    Ok(disjuncts(f))
}

fn disjuncts(f: &Formula) -> Vec<Vec<Formula>> {
    match f {
        Formula::And(gs) => {
            let mut acc: Vec<Vec<Formula>> = vec![Vec::new()];
            for g in gs {
                let parts = disjuncts(g);
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for a in &acc {
                    for p in &parts {
                        let mut c = a.clone();
                        for l in p {
                            if !c.contains(l) {
                                c.push(l.clone());
                            }
                        }
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        Formula::Or(gs) => gs.iter().flat_map(disjuncts).collect(),
        Formula::Imply(..) => disjuncts(&to_nnf(f)),
        _ => vec![vec![f.clone()]],
    }
}

/// Distribute conjunctions over disjunctions. Quantified subformulas are treated as
/// leaves. Fails when the result would exceed `budget` disjuncts.
pub fn to_dnf(f: &Formula, budget: u128) -> Result<Formula, NormalizeError> {
    let ds = dnf_disjuncts(f, budget)?;
    Ok(from_disjuncts(ds))
}

pub(crate) fn from_disjuncts(mut ds: Vec<Vec<Formula>>) -> Formula {
    let conj = |mut c: Vec<Formula>| {
        if c.len() == 1 {
            c.pop().unwrap()
        } else {
            Formula::And(c)
        }
    };
    if ds.len() == 1 {
        return conj(ds.pop().unwrap());
    }
    Formula::Or(ds.into_iter().map(conj).collect())
}

/// Syntactic DNF check: no conjunction has a disjunction below it.
pub fn is_dnf(f: &Formula) -> bool {
    fn conj_ok(f: &Formula) -> bool {
        match f {
            Formula::And(gs) => gs.iter().all(conj_ok),
            Formula::Or(_) | Formula::Imply(..) => false,
            _ => is_leaf(f),
        }
    }
    match f {
        Formula::Or(gs) => gs.iter().all(conj_ok),
        _ => conj_ok(f),
    }
}

/// Substitute `binding`, evaluate fully bound static atoms and equalities, and
/// propagate TRUE/FALSE upward.
pub fn simplify(f: &Formula, statics: &StaticInfo, binding: &Binding) -> Formula {
    simp(&f.substitute(binding), statics)
}

fn simp(f: &Formula, statics: &StaticInfo) -> Formula {
    match f {
        Formula::Atom(a) => match statics.evaluate(a) {
            Some(true) => Formula::truth(),
            Some(false) => Formula::falsity(),
            None => f.clone(),
        },
        Formula::Not(g) => {
            let g = simp(g, statics);
            if g.is_true() {
                Formula::falsity()
            } else if g.is_false() {
                Formula::truth()
            } else {
                Formula::not(g)
            }
        }
        Formula::And(gs) => {
            let mut out = Vec::new();
            for g in gs {
                let g = simp(g, statics);
                if g.is_false() {
                    return Formula::falsity();
                }
                if !g.is_true() {
                    out.push(g);
                }
            }
            Formula::And(out)
        }
        Formula::Or(gs) => {
            let mut out = Vec::new();
            for g in gs {
                let g = simp(g, statics);
                if g.is_true() {
                    return Formula::truth();
                }
                if !g.is_false() {
                    out.push(g);
                }
            }
            Formula::Or(out)
        }
        Formula::Imply(a, b) => {
            let a = simp(a, statics);
            let b = simp(b, statics);
            if a.is_false() || b.is_true() {
                Formula::truth()
            } else if a.is_true() {
                b
            } else if b.is_false() {
                Formula::not(a)
            } else {
                Formula::Imply(Box::new(a), Box::new(b))
            }
        }
        Formula::Forall(vs, g) => {
            let g = simp(g, statics);
            if g.is_true() {
                g
            } else {
                Formula::Forall(vs.clone(), Box::new(g))
            }
        }
        Formula::Exists(vs, g) => {
            let g = simp(g, statics);
            if g.is_false() {
                g
            } else {
                Formula::Exists(vs.clone(), Box::new(g))
            }
        }
    }
}
