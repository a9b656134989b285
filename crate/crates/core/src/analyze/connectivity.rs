//! Adders and requirers per fact.

use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use crate::model::{GroundTask, Rational};
use crate::normalize::{GOAL_ACHIEVER_PREFIX, GOAL_REACHED};

/// Distribution summary. `mean` and `variance` are exact; the population standard
/// deviation is the square root of `variance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Summary {
    pub count: usize,
    pub min: u64,
    pub max: u64,
    pub mean: Rational,
    pub variance: Rational,
}

impl Summary {
    pub fn of(values: &[u64]) -> Summary {
        if values.is_empty() {
            return Summary { count: 0, min: 0, max: 0, mean: Rational::from_integer(0), variance: Rational::from_integer(0) };
        }
        // n·Σv² − (Σv)² over n², reduced in 128-bit before narrowing.
        let n = values.len() as i128;
        let total: i128 = values.iter().map(|&v| v as i128).sum();
        let squares: i128 = values.iter().map(|&v| (v as i128) * (v as i128)).sum();
        let mean = ratio(total, n);
        let variance = ratio(n * squares - total * total, n * n);
        Summary {
            count: values.len(),
            min: *values.iter().min().unwrap(),
            max: *values.iter().max().unwrap(),
            mean,
            variance,
        }
    }

    /// Population standard deviation.
    pub fn dev(&self) -> f64 {
        self.variance.to_f64().unwrap_or(f64::NAN).sqrt()
    }
}

fn ratio(num: i128, den: i128) -> Rational {
    let g = num_integer::gcd(num, den).max(1);
    Rational::new((num / g) as i64, (den / g) as i64)
}

fn two_decimals(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl Serialize for Summary {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Summary", 4)?;
        st.serialize_field("min", &self.min)?;
        st.serialize_field("mean", &crate::model::rational::round2(&self.mean))?;
        st.serialize_field("max", &self.max)?;
        st.serialize_field("dev", &two_decimals(self.dev()))?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConnectivityStats {
    /// Counts per fact index; bookkeeping facts included.
    #[serde(skip)]
    pub adders: Vec<u64>,
    #[serde(skip)]
    pub requirers: Vec<u64>,
    /// Over facts that are not bookkeeping.
    #[serde(rename = "adders")]
    pub adders_summary: Summary,
    #[serde(rename = "requirers")]
    pub requirers_summary: Summary,
    /// Over bookkeeping facts only.
    pub bookkeeping_adders: Summary,
    pub bookkeeping_requirers: Summary,
}

/// Adders and requirers of every fact. An action adds a fact if any effect adds
/// it and requires it if its precondition or any effect condition mentions it,
/// negated or not. Rules count as actions. With `include_goal_achievers` false,
/// the goal-achiever actions and the goal-reached fact are left out.
pub fn connectivity_stats(g: &GroundTask, include_goal_achievers: bool) -> ConnectivityStats {
    let n = g.facts.len();
    let mut adders = vec![0u64; n];
    let mut requirers = vec![0u64; n];
    let mut seen_add = vec![usize::MAX; n];
    let mut seen_req = vec![usize::MAX; n];
    for (ai, a) in g.actions.iter().enumerate() {
        if !include_goal_achievers && a.op.starts_with(GOAL_ACHIEVER_PREFIX) {
            continue;
        }
        for f in a.all_adds() {
            if seen_add[f.index()] != ai {
                seen_add[f.index()] = ai;
                adders[f.index()] += 1;
            }
        }
        let conds = a.precondition.facts().chain(a.effects.iter().flat_map(|e| e.condition.facts()));
        for f in conds {
            if seen_req[f.index()] != ai {
                seen_req[f.index()] = ai;
                requirers[f.index()] += 1;
            }
        }
    }
    for r in &g.rules {
        adders[r.head.index()] += 1;
        let mut body: Vec<usize> = r.body.facts().map(|f| f.index()).collect();
        body.sort_unstable();
        body.dedup();
        for f in body {
            requirers[f] += 1;
        }
    }
    let skip = if include_goal_achievers { None } else { g.facts.get(&crate::model::GroundAtom::new(GOAL_REACHED, &[])) };
    let pick = |counts: &[u64], bookkeeping: bool| -> Vec<u64> {
        g.facts
            .iter()
            .filter(|(f, _)| Some(*f) != skip && g.bookkeeping_facts.contains(f) == bookkeeping)
            .map(|(f, _)| counts[f.index()])
            .collect()
    };
    ConnectivityStats {
        adders_summary: Summary::of(&pick(&adders, false)),
        requirers_summary: Summary::of(&pick(&requirers, false)),
        bookkeeping_adders: Summary::of(&pick(&adders, true)),
        bookkeeping_requirers: Summary::of(&pick(&requirers, true)),
        adders,
        requirers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Condition, FactId, GroundAction, GroundAtom, GroundEffect};

    #[test]
    fn single_adder() {
        let mut g = GroundTask::new("t", "d");
        let p = g.facts.intern(GroundAtom::new("p", &[]));
        g.actions.push(GroundAction::new("a", vec![], Condition::default(), GroundEffect::unconditional(vec![p], vec![])));
        let s = connectivity_stats(&g, true);
        assert_eq!((s.adders[0], s.requirers[0]), (1, 0));
        assert_eq!(s.adders_summary.mean, Rational::from_integer(1));
    }

    #[test]
    fn summary_is_population() {
        let s = Summary::of(&[1, 2, 3, 4]);
        assert_eq!(s.mean, Rational::new(5, 2));
        assert_eq!(s.variance, Rational::new(5, 4));
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"min":1,"mean":2.5,"max":4,"dev":1.12}"#);
    }

    #[test]
    fn counts_each_action_once() {
        let mut g = GroundTask::new("t", "d");
        let p = g.facts.intern(GroundAtom::new("p", &[]));
        let q = g.facts.intern(GroundAtom::new("q", &[]));
        let mut a = GroundAction::new("a", vec![], Condition::new(vec![p], vec![q]), GroundEffect::unconditional(vec![q], vec![]));
        a.effects.push(GroundEffect { condition: Condition::positive(vec![p]), adds: vec![q], dels: vec![] });
        g.actions.push(a);
        g.rules.push(crate::model::GroundRule { head: FactId(1), body: Condition::positive(vec![p]) });
        let s = connectivity_stats(&g, true);
        assert_eq!(s.adders, vec![0, 2]);
        assert_eq!(s.requirers, vec![2, 1]);
    }
}
