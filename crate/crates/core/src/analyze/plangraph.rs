//! Graphplan-style planning graph with binary mutexes.

use fixedbitset::FixedBitSet;
use serde::{Serialize, Serializer};

use super::AnalyzeError;
use crate::model::{FactId, GroundTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanGraphMode {
    Parallel,
    /// Every pair of distinct non-NOOP actions in a layer is mutex.
    Serialized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PlanGraphLength {
    Layer(usize),
    Unreachable,
}

impl Serialize for PlanGraphLength {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PlanGraphLength::Layer(i) => s.serialize_u64(*i as u64),
            PlanGraphLength::Unreachable => s.serialize_str("unreachable"),
        }
    }
}

struct Step {
    pre: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
    noop: bool,
}

fn ids(v: &[FactId]) -> Vec<usize> {
    v.iter().map(|f| f.index()).collect()
}

/// Layer statistics of a built graph, mainly for inspection in tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanGraphLayers {
    pub facts: Vec<FixedBitSet>,
    /// Number of mutex fact pairs per layer.
    pub mutex_pairs: Vec<usize>,
    pub length: PlanGraphLength,
}

fn mutex_pairs(m: &[FixedBitSet]) -> usize {
    m.iter().map(|r| r.count_ones(..)).sum::<usize>() / 2
}

/// Build the graph until the goal appears without mutexes or the graph levels off.
pub fn build_plangraph(g: &GroundTask, mode: PlanGraphMode) -> Result<PlanGraphLayers, AnalyzeError> {
    if !g.is_strips() {
        return Err(AnalyzeError::NotStrips("planning graphs need pure STRIPS input".into()));
    }
    let n = g.facts.len();
    let goal = ids(&g.goal.pos);
    let actions: Vec<Step> = g
        .actions
        .iter()
        .map(|a| Step {
            pre: ids(&a.precondition.pos),
            add: ids(&a.effects[0].adds),
            del: ids(&a.effects[0].dels),
            noop: false,
        })
        .collect();
    let mut facts = g.initial_state();
    let mut fmutex: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(n); n];
    let mut layers = PlanGraphLayers { facts: vec![facts.clone()], mutex_pairs: vec![0], length: PlanGraphLength::Unreachable };
    loop {
        if goal.iter().all(|&p| facts.contains(p))
            && goal.iter().all(|&p| goal.iter().all(|&q| !fmutex[p].contains(q)))
        {
            layers.length = PlanGraphLength::Layer(layers.facts.len() - 1);
            return Ok(layers);
        }
        // Action layer: applicable actions followed by NOOPs.
        let mut steps: Vec<&Step> = actions
            .iter()
            .filter(|a| {
                a.pre.iter().all(|&p| facts.contains(p))
                    && a.pre.iter().all(|&p| a.pre.iter().all(|&q| !fmutex[p].contains(q)))
            })
            .collect();
        let noops: Vec<Step> = facts.ones().map(|p| Step { pre: vec![p], add: vec![p], del: vec![], noop: true }).collect();
        steps.extend(noops.iter());
        let k = steps.len();
        // Per-fact lookups for the interference test.
        let mut adds_of = vec![FixedBitSet::with_capacity(n); k];
        let mut dels_of = vec![FixedBitSet::with_capacity(n); k];
        let mut pres_of = vec![FixedBitSet::with_capacity(n); k];
        for (i, s) in steps.iter().enumerate() {
            s.add.iter().for_each(|&p| adds_of[i].insert(p));
            s.del.iter().for_each(|&p| dels_of[i].insert(p));
            s.pre.iter().for_each(|&p| pres_of[i].insert(p));
        }
        let mut amutex = vec![FixedBitSet::with_capacity(k); k];
        for i in 0..k {
            for j in (i + 1)..k {
                let (a, b) = (steps[i], steps[j]);
                let serial = mode == PlanGraphMode::Serialized && !a.noop && !b.noop;
                let interfere = !dels_of[i].is_disjoint(&pres_of[j])
                    || !dels_of[i].is_disjoint(&adds_of[j])
                    || !dels_of[j].is_disjoint(&pres_of[i])
                    || !dels_of[j].is_disjoint(&adds_of[i]);
                let competing = a.pre.iter().any(|&p| b.pre.iter().any(|&q| fmutex[p].contains(q)));
                if serial || interfere || competing {
                    amutex[i].insert(j);
                    amutex[j].insert(i);
                }
            }
        }
        let mut next = FixedBitSet::with_capacity(n);
        let mut achievers: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in steps.iter().enumerate() {
            for &p in &s.add {
                next.insert(p);
                achievers[p].push(i);
            }
        }
        let mut nmutex = vec![FixedBitSet::with_capacity(n); n];
        let present: Vec<usize> = next.ones().collect();
        for (x, &p) in present.iter().enumerate() {
            for &q in &present[x + 1..] {
                let all = achievers[p]
                    .iter()
                    .all(|&a| achievers[q].iter().all(|&b| a != b && amutex[a].contains(b)));
                if all {
                    nmutex[p].insert(q);
                    nmutex[q].insert(p);
                }
            }
        }
        if next == facts && nmutex == fmutex {
            layers.length = PlanGraphLength::Unreachable;
            return Ok(layers);
        }
        facts = next;
        fmutex = nmutex;
        layers.facts.push(facts.clone());
        layers.mutex_pairs.push(mutex_pairs(&fmutex));
    }
}

/// Index of the first layer containing the goal without mutexes.
pub fn plangraph_length(g: &GroundTask, mode: PlanGraphMode) -> Result<PlanGraphLength, AnalyzeError> {
    Ok(build_plangraph(g, mode)?.length)
}
