use std::collections::BTreeSet;

use proptest::prelude::*;

use pddlforge::model::{
    evaluate_formula, successor, Condition, DerivedEvaluator, FactId, Formula, GroundAction, GroundAtom, GroundEffect,
    GroundRule, GroundTask, LiftedTask, State,
};
use pddlforge::normalize::{eliminate_imply, is_dnf, is_nnf, to_dnf, to_nnf, DEFAULT_DNF_BUDGET};

const BASIC: usize = 6;
const DERIVED: usize = 3;

fn task_with_facts() -> GroundTask {
    let mut g = GroundTask::new("t", "d");
    for i in 0..BASIC {
        g.facts.intern(GroundAtom::new(&format!("b{i}"), &[]));
    }
    for i in 0..DERIVED {
        g.facts.intern(GroundAtom::new(&format!("d{i}"), &[]));
    }
    g
}

fn ids(v: &[usize]) -> Vec<FactId> {
    v.iter().map(|&i| FactId(i as u32)).collect()
}

fn state(g: &GroundTask, bits: u32) -> State {
    let mut s = g.empty_state();
    for i in 0..BASIC {
        if bits & (1 << i) != 0 {
            s.insert(i);
        }
    }
    s
}

fn basic_subset() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::btree_set(0..BASIC, 0..3).prop_map(|s| s.into_iter().collect())
}

/// Rule for derived fact `h` reading basic facts and derived facts below `h`
/// (negatively only when `negative` is set), so the rule set is stratified.
fn rule(h: usize, negative: bool) -> impl Strategy<Value = GroundRule> {
    let lower: Vec<usize> = (BASIC..BASIC + h).collect();
    let lower2 = lower.clone();
    (
        basic_subset(),
        proptest::sample::subsequence(lower, 0..=h),
        basic_subset(),
        proptest::sample::subsequence(lower2, 0..=h),
        any::<bool>(),
    )
        .prop_map(move |(bp, mut dp, bn, dn, recursive)| {
            if recursive {
                // Positive self-dependency through another rule for the same head.
                dp.push(BASIC + h);
            }
            let mut pos = bp;
            pos.extend(dp);
            let mut neg = if negative { bn } else { Vec::new() };
            if negative {
                neg.extend(dn);
            }
            let neg: Vec<usize> = neg.into_iter().filter(|x| !pos.contains(x)).collect();
            GroundRule { head: FactId((BASIC + h) as u32), body: Condition::new(ids(&pos), ids(&neg)) }
        })
}

fn rules(negative: bool) -> impl Strategy<Value = Vec<GroundRule>> {
    let per_head: Vec<_> = (0..DERIVED).map(|h| proptest::collection::vec(rule(h, negative), 1..3)).collect();
    per_head.prop_map(|rs| rs.into_iter().flatten().collect())
}

fn effect() -> impl Strategy<Value = GroundEffect> {
    (basic_subset(), basic_subset(), basic_subset(), basic_subset()).prop_map(|(cp, cn, a, d)| {
        let cn: Vec<usize> = cn.into_iter().filter(|x| !cp.contains(x)).collect();
        let mut e = GroundEffect::unconditional(ids(&a), ids(&d));
        e.condition = Condition::new(ids(&cp), ids(&cn));
        e
    })
}

fn action() -> impl Strategy<Value = GroundAction> {
    (basic_subset(), basic_subset(), proptest::collection::vec(effect(), 0..3)).prop_map(|(a, d, ces)| {
        let mut act = GroundAction::new("a", Vec::new(), Condition::default(), GroundEffect::unconditional(ids(&a), ids(&d)));
        act.effects.extend(ces);
        act
    })
}

fn subset_of(s: &State, t: &State) -> bool {
    s.is_subset(t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closure_is_idempotent(rs in rules(true), bits in 0u32..(1 << BASIC)) {
        let mut g = task_with_facts();
        g.rules = rs;
        let eval = DerivedEvaluator::new(&g).unwrap();
        let s = state(&g, bits);
        let full = eval.closure(&s);
        prop_assert!(subset_of(&s, &full));
        prop_assert_eq!(eval.closure(&full), full.clone());
        let ext = eval.extension(&s);
        prop_assert!(ext.ones().all(|i| i >= BASIC));
    }

    #[test]
    fn positive_rules_are_monotone(rs in rules(false), a in 0u32..(1 << BASIC), b in 0u32..(1 << BASIC)) {
        let mut g = task_with_facts();
        g.rules = rs;
        let eval = DerivedEvaluator::new(&g).unwrap();
        let small = state(&g, a & b);
        let large = state(&g, a | b);
        prop_assert!(subset_of(&eval.closure(&small), &eval.closure(&large)));
    }

    #[test]
    fn closure_satisfies_every_rule(rs in rules(true), bits in 0u32..(1 << BASIC)) {
        let mut g = task_with_facts();
        g.rules = rs.clone();
        let full = DerivedEvaluator::new(&g).unwrap().closure(&state(&g, bits));
        for r in &rs {
            prop_assert!(!r.body.holds(&full) || full.contains(r.head.index()));
        }
    }

    #[test]
    fn successor_deletes_before_adds(act in action(), bits in 0u32..(1 << BASIC)) {
        let g = task_with_facts();
        let s = state(&g, bits);
        let next = successor(&act, &s, &s);
        let fired: Vec<&GroundEffect> = act.effects.iter().filter(|e| e.condition.holds(&s)).collect();
        let adds: BTreeSet<usize> = fired.iter().flat_map(|e| e.adds.iter().map(|f| f.index())).collect();
        let dels: BTreeSet<usize> = fired.iter().flat_map(|e| e.dels.iter().map(|f| f.index())).collect();
        for i in 0..BASIC {
            let expect = adds.contains(&i) || (s.contains(i) && !dels.contains(&i));
            prop_assert_eq!(next.contains(i), expect, "fact {}", i);
        }
    }

    #[test]
    fn untouched_facts_keep_their_value(acts in proptest::collection::vec(action(), 1..4), bits in 0u32..(1 << BASIC)) {
        let g = task_with_facts();
        let touched: BTreeSet<usize> = acts
            .iter()
            .flat_map(|a| a.all_adds().chain(a.all_dels()).map(|f| f.index()).collect::<Vec<_>>())
            .collect();
        let mut s = state(&g, bits);
        let start = s.clone();
        for a in &acts {
            s = successor(a, &s, &s);
        }
        for i in (0..BASIC).filter(|i| !touched.contains(i)) {
            prop_assert_eq!(s.contains(i), start.contains(i));
        }
    }
}

#[derive(Debug, Clone)]
enum Prop {
    Var(usize),
    Not(Box<Prop>),
    And(Vec<Prop>),
    Or(Vec<Prop>),
    Imply(Box<Prop>, Box<Prop>),
}

const VARS: usize = 4;

fn prop_formula() -> impl Strategy<Value = Prop> {
    let leaf = (0..VARS).prop_map(Prop::Var);
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|p| Prop::Not(Box::new(p))),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(Prop::And),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(Prop::Or),
            (inner.clone(), inner).prop_map(|(a, b)| Prop::Imply(Box::new(a), Box::new(b))),
        ]
    })
}

fn truth(p: &Prop, bits: u32) -> bool {
    match p {
        Prop::Var(i) => bits & (1 << i) != 0,
        Prop::Not(q) => !truth(q, bits),
        Prop::And(qs) => qs.iter().all(|q| truth(q, bits)),
        Prop::Or(qs) => qs.iter().any(|q| truth(q, bits)),
        Prop::Imply(a, b) => !truth(a, bits) || truth(b, bits),
    }
}

fn to_formula(p: &Prop) -> Formula {
    match p {
        Prop::Var(i) => Formula::atom(&format!("p{i}"), Vec::new()),
        Prop::Not(q) => Formula::not(to_formula(q)),
        Prop::And(qs) => Formula::And(qs.iter().map(to_formula).collect()),
        Prop::Or(qs) => Formula::Or(qs.iter().map(to_formula).collect()),
        Prop::Imply(a, b) => Formula::Imply(Box::new(to_formula(a)), Box::new(to_formula(b))),
    }
}

fn atoms(bits: u32) -> BTreeSet<GroundAtom> {
    (0..VARS).filter(|i| bits & (1 << i) != 0).map(|i| GroundAtom::new(&format!("p{i}"), &[])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn evaluation_matches_truth_tables(p in prop_formula()) {
        let objects = LiftedTask::empty("d").object_table();
        let f = to_formula(&p);
        let none = BTreeSet::new();
        for bits in 0..(1u32 << VARS) {
            prop_assert_eq!(evaluate_formula(&atoms(bits), &none, &f, &objects).unwrap(), truth(&p, bits));
            // Facts split between the state and the derived set give the same value.
            let (a, b): (BTreeSet<_>, BTreeSet<_>) = atoms(bits).into_iter().partition(|x| x.predicate.as_str() < "p2");
            prop_assert_eq!(evaluate_formula(&a, &b, &f, &objects).unwrap(), truth(&p, bits));
        }
    }

    #[test]
    fn nnf_and_dnf_preserve_truth(p in prop_formula()) {
        let objects = LiftedTask::empty("d").object_table();
        let f = to_formula(&p);
        let nnf = to_nnf(&eliminate_imply(&f));
        prop_assert!(is_nnf(&nnf));
        let dnf = to_dnf(&nnf, DEFAULT_DNF_BUDGET).unwrap();
        prop_assert!(is_dnf(&dnf));
        let none = BTreeSet::new();
        for bits in 0..(1u32 << VARS) {
            let want = truth(&p, bits);
            prop_assert_eq!(evaluate_formula(&atoms(bits), &none, &nnf, &objects).unwrap(), want);
            prop_assert_eq!(evaluate_formula(&atoms(bits), &none, &dnf, &objects).unwrap(), want);
        }
    }
}

#[test]
fn open_formula_is_rejected() {
    let objects = LiftedTask::empty("d").object_table();
    let f = Formula::atom("p", vec![pddlforge::model::Term::var("x")]);
    assert!(evaluate_formula(&BTreeSet::new(), &BTreeSet::new(), &f, &objects).is_err());
}
