use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::inference::joint_marginal;
use crate::model::Network;

pub const DEFAULT_MAX_EVALUATIONS: u64 = 100_000_000;

/// Posteriors closer than this to the maximum count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Abort before running if more evidence combinations than this would
    /// be evaluated.
    pub max_evaluations: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

/// An evidence set as `(variable, state)` labels, in pool order.
pub type EvidenceSet = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMaximum {
    pub k: usize,
    /// Absent if every combination had probability zero.
    pub max_posterior: Option<f64>,
    /// Every evidence set attaining the maximum, in pool order.
    pub argmax: Vec<EvidenceSet>,
    pub evaluated: u64,
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiFactorResult {
    pub target: String,
    pub target_state: String,
    pub pool: Vec<String>,
    pub per_k: Vec<KMaximum>,
}

/// Number of evidence sets with exactly `k` assignments over distinct
/// variables with the given cardinalities (the elementary symmetric
/// polynomial `e_k` of the cardinalities).
pub fn combination_count(cards: &[usize], k: usize) -> u128 {
    let mut e = vec![0u128; k + 1];
    e[0] = 1;
    for &c in cards {
        for j in (1..=k).rev() {
            e[j] = e[j].saturating_add(e[j - 1].saturating_mul(c as u128));
        }
    }
    e[k]
}

struct Search<'a> {
    network: &'a Network,
    target: usize,
    target_state: usize,
    pool: Vec<usize>,
}

/// One evaluated combination: pool positions, state indices, posterior.
type Scored = (Vec<usize>, Vec<usize>, f64);

impl Search<'_> {
    fn new<'a>(
        network: &'a Network,
        target: &str,
        target_state: &str,
        pool: &[&str],
    ) -> Result<Search<'a>, AnalysisError> {
        let t = network.require(target)?;
        let ts = network.variable(t).state_index(target_state).ok_or_else(|| {
            AnalysisError::UnknownState {
                variable: target.to_string(),
                state: target_state.to_string(),
            }
        })?;
        let mut idx = Vec::with_capacity(pool.len());
        for &p in pool {
            let i = network.require(p)?;
            if i == t {
                return Err(AnalysisError::TargetInPool(p.to_string()));
            }
            if idx.contains(&i) {
                return Err(AnalysisError::DuplicateInPool(p.to_string()));
            }
            idx.push(i);
        }
        Ok(Search {
            network,
            target: t,
            target_state: ts,
            pool: idx,
        })
    }

    fn cards(&self) -> Vec<usize> {
        self.pool.iter().map(|&v| self.network.cardinality(v)).collect()
    }

    fn check_range(&self, ks: &RangeInclusive<usize>, config: &SearchConfig) -> Result<(), AnalysisError> {
        if *ks.start() < 1 || ks.end() > &self.pool.len() || ks.start() > ks.end() {
            return Err(AnalysisError::InvalidRange {
                start: *ks.start(),
                end: *ks.end(),
                pool: self.pool.len(),
            });
        }
        let cards = self.cards();
        let estimate = ks
            .clone()
            .map(|k| combination_count(&cards, k))
            .fold(0u128, u128::saturating_add);
        if estimate > config.max_evaluations as u128 {
            return Err(AnalysisError::PoolTooLarge {
                estimate,
                cap: config.max_evaluations,
            });
        }
        Ok(())
    }

    /// Calls `visit` with the posterior of every state combination of the
    /// pool subset `subset` (pool positions); returns the number skipped.
    fn scan_subset(&self, subset: &[usize], mut visit: impl FnMut(&[usize], f64)) -> u64 {
        let mut scope: Vec<usize> = subset.iter().map(|&p| self.pool[p]).collect();
        scope.push(self.target);
        let joint = joint_marginal(self.network, &scope, &[]);
        let t = self.network.cardinality(self.target);
        let cards = &joint.cards()[..subset.len()];
        let mut states = vec![0usize; subset.len()];
        let mut skipped = 0;
        for row in joint.values().chunks(t) {
            let denominator: f64 = row.iter().sum();
            if denominator > 0.0 {
                visit(&states, row[self.target_state] / denominator);
            } else {
                skipped += 1;
            }
            for d in (0..states.len()).rev() {
                states[d] += 1;
                if states[d] < cards[d] {
                    break;
                }
                states[d] = 0;
            }
        }
        skipped
    }

    fn label(&self, subset: &[usize], states: &[usize]) -> EvidenceSet {
        subset
            .iter()
            .zip(states)
            .map(|(&p, &s)| {
                let v = self.network.variable(self.pool[p]);
                (v.name.clone(), v.states[s].clone())
            })
            .collect()
    }

    fn maximum(&self, k: usize) -> KMaximum {
        let subsets = subsets(self.pool.len(), k);
        let partial: Vec<(Option<f64>, Vec<Scored>, u64, u64)> = subsets
            .par_iter()
            .map(|subset| {
                let mut best: Option<f64> = None;
                let mut ties: Vec<Scored> = Vec::new();
                let mut evaluated = 0u64;
                let skipped = self.scan_subset(subset, |states, p| {
                    evaluated += 1;
                    if best.is_none_or(|b| p > b) {
                        best = Some(p);
                        ties.retain(|t| t.2 >= p - TIE_TOLERANCE);
                    }
                    if best.is_some_and(|b| p >= b - TIE_TOLERANCE) {
                        ties.push((subset.clone(), states.to_vec(), p));
                    }
                });
                (best, ties, evaluated, skipped)
            })
            .collect();
        let max = partial
            .iter()
            .filter_map(|p| p.0)
            .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
        let mut argmax: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        if let Some(m) = max {
            for (_, ties, _, _) in &partial {
                argmax.extend(
                    ties.iter()
                        .filter(|t| t.2 >= m - TIE_TOLERANCE)
                        .map(|t| (t.0.clone(), t.1.clone())),
                );
            }
        }
        argmax.sort();
        KMaximum {
            k,
            max_posterior: max,
            argmax: argmax.iter().map(|(s, st)| self.label(s, st)).collect(),
            evaluated: partial.iter().map(|p| p.2).sum(),
            skipped: partial.iter().map(|p| p.3).sum(),
        }
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (0..k).rev().find(|&i| current[i] < n - k + i) else {
            return out;
        };
        current[i] += 1;
        for j in i + 1..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// For each `k`, the largest `P(target = target_state | evidence)` over
/// every evidence set of `k` distinct pool variables, found exhaustively.
/// Combinations with zero probability are skipped and counted.
pub fn multifactor_search(
    network: &Network,
    target: &str,
    target_state: &str,
    pool: &[&str],
    ks: RangeInclusive<usize>,
    config: &SearchConfig,
) -> Result<MultiFactorResult, AnalysisError> {
    let search = Search::new(network, target, target_state, pool)?;
    search.check_range(&ks, config)?;
    let per_k = ks.map(|k| search.maximum(k)).collect();
    Ok(MultiFactorResult {
        target: target.to_string(),
        target_state: target_state.to_string(),
        pool: pool.iter().map(|s| s.to_string()).collect(),
        per_k,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskProfile {
    pub evidence: EvidenceSet,
    pub posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorFrequency {
    pub variable: String,
    pub state: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskProfileSet {
    pub threshold: f64,
    pub k: usize,
    /// Descending by posterior, then in pool order.
    pub profiles: Vec<RiskProfile>,
    /// Occurrences of each `variable = state` across the profiles, most
    /// frequent first (ties in pool order). Items that never occur are
    /// omitted.
    pub frequencies: Vec<FactorFrequency>,
    pub evaluated: u64,
    pub skipped: u64,
}

impl RiskProfileSet {
    pub fn frequencies_csv(&self) -> String {
        let mut out = String::from("variable,state,count,share\n");
        for f in &self.frequencies {
            let share = f.count as f64 / self.profiles.len() as f64;
            out.push_str(&format!("{},{},{},{share:.6}\n", f.variable, f.state, f.count));
        }
        out
    }

    pub fn profiles_csv(&self) -> String {
        let mut out = String::from("posterior,evidence\n");
        for p in &self.profiles {
            let ev: Vec<String> = p.evidence.iter().map(|(v, s)| format!("{v}={s}")).collect();
            out.push_str(&format!("{:.12},\"{}\"\n", p.posterior, ev.join(",")));
        }
        out
    }
}

/// Every evidence set of exactly `k` pool assignments whose posterior is at
/// least `threshold`, with the frequency of each assignment among them.
pub fn risk_profiles(
    network: &Network,
    target: &str,
    target_state: &str,
    pool: &[&str],
    k: usize,
    threshold: f64,
    config: &SearchConfig,
) -> Result<RiskProfileSet, AnalysisError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AnalysisError::Domain(format!("threshold must lie in [0, 1], got {threshold}")));
    }
    let search = Search::new(network, target, target_state, pool)?;
    search.check_range(&(k..=k), config)?;
    let partial: Vec<(Vec<Scored>, u64, u64)> = subsets(search.pool.len(), k)
        .par_iter()
        .map(|subset| {
            let mut hits = Vec::new();
            let mut evaluated = 0;
            let skipped = search.scan_subset(subset, |states, p| {
                evaluated += 1;
                if p >= threshold {
                    hits.push((subset.clone(), states.to_vec(), p));
                }
            });
            (hits, evaluated, skipped)
        })
        .collect();
    let mut hits: Vec<Scored> = partial.iter().flat_map(|p| p.0.iter().cloned()).collect();
    hits.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| (&a.0, &a.1).cmp(&(&b.0, &b.1))));

    // offsets of each pool variable's states in a flat counter
    let cards = search.cards();
    let offsets: Vec<usize> = cards
        .iter()
        .scan(0, |acc, &c| {
            let o = *acc;
            *acc += c;
            Some(o)
        })
        .collect();
    let mut counts = vec![0usize; cards.iter().sum()];
    for (subset, states, _) in &hits {
        for (&p, &s) in subset.iter().zip(states) {
            counts[offsets[p] + s] += 1;
        }
    }
    let mut frequencies: Vec<(usize, FactorFrequency)> = Vec::new();
    for (p, &off) in offsets.iter().enumerate() {
        let v = network.variable(search.pool[p]);
        for s in 0..cards[p] {
            if counts[off + s] > 0 {
                frequencies.push((
                    off + s,
                    FactorFrequency {
                        variable: v.name.clone(),
                        state: v.states[s].clone(),
                        count: counts[off + s],
                    },
                ));
            }
        }
    }
    frequencies.sort_by(|a, b| b.1.count.cmp(&a.1.count).then(a.0.cmp(&b.0)));

    Ok(RiskProfileSet {
        threshold,
        k,
        profiles: hits
            .iter()
            .map(|(subset, states, p)| RiskProfile {
                evidence: search.label(subset, states),
                posterior: *p,
            })
            .collect(),
        frequencies: frequencies.into_iter().map(|(_, f)| f).collect(),
        evaluated: partial.iter().map(|p| p.1).sum(),
        skipped: partial.iter().map(|p| p.2).sum(),
    })
}
