use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::divergence::{js_distance, js_divergence};
use super::AnalysisError;
use crate::inference::joint_marginal;
use crate::model::Network;

/// How the conditionals `P(target | source = v)` are aggregated into one
/// score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrengthMetric {
    /// Square root of the generalized JS divergence weighted by
    /// `P(source = v)`.
    #[default]
    WeightedJs,
    /// Largest JS distance between any two conditionals.
    PairwiseMax,
}

/// Conditionals of the target given each positive-probability source
/// state, with those states' probabilities.
fn conditionals(
    network: &Network,
    source: usize,
    target: usize,
) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let joint = joint_marginal(network, &[source, target], &[]);
    let t = network.cardinality(target);
    let mut states = Vec::new();
    let mut dists = Vec::new();
    let mut weights = Vec::new();
    for (v, row) in joint.values().chunks(t).enumerate() {
        let w: f64 = row.iter().sum();
        if w > 0.0 {
            states.push(v);
            dists.push(row.iter().map(|x| x / w).collect());
            weights.push(w);
        }
    }
    (states, dists, weights)
}

fn resolve_pair(network: &Network, source: &str, target: &str) -> Result<(usize, usize), AnalysisError> {
    let s = network.require(source)?;
    let t = network.require(target)?;
    if s == t {
        return Err(AnalysisError::SameVariable(source.to_string()));
    }
    Ok((s, t))
}

/// Strength of influence of `source` on `target`, in [0, 1].
///
/// Other variables are marginalized out. The divergence of `k`
/// conditionals over `m` target states is at most `log min(k, m)`, so that
/// is used as the log base; for a binary target this is base 2.
pub fn influence_strength(network: &Network, source: &str, target: &str) -> Result<f64, AnalysisError> {
    influence_strength_with(network, source, target, StrengthMetric::WeightedJs)
}

pub fn influence_strength_with(
    network: &Network,
    source: &str,
    target: &str,
    metric: StrengthMetric,
) -> Result<f64, AnalysisError> {
    let (s, t) = resolve_pair(network, source, target)?;
    let (states, dists, weights) = conditionals(network, s, t);
    if states.len() < 2 {
        warn!("`{source}` has fewer than two states with positive probability; strength is 0");
        return Ok(0.0);
    }
    let score = match metric {
        StrengthMetric::WeightedJs => {
            let base = states.len().min(network.cardinality(t)) as f64;
            js_divergence(&dists, &weights, base).sqrt()
        }
        StrengthMetric::PairwiseMax => {
            let mut best: f64 = 0.0;
            for i in 0..dists.len() {
                for j in i + 1..dists.len() {
                    best = best.max(js_distance(&dists[i], &dists[j]));
                }
            }
            best
        }
    };
    Ok(score.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthEntry {
    pub variable: String,
    pub score: f64,
}

/// Candidates ranked by strength of influence on `target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthReport {
    pub target: String,
    pub metric: StrengthMetric,
    /// Descending by score, ties by name.
    pub entries: Vec<StrengthEntry>,
    pub control: Option<StrengthEntry>,
}

impl StrengthReport {
    pub fn score(&self, variable: &str) -> Option<f64> {
        self.entries
            .iter()
            .chain(self.control.iter())
            .find(|e| e.variable == variable)
            .map(|e| e.score)
    }

    /// 1-based position of `variable` in the ranking.
    pub fn rank(&self, variable: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.variable == variable).map(|p| p + 1)
    }

    /// `rank,variable,score,versus_control`. Scores equal to the control's
    /// count as below it.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,variable,score,versus_control\n");
        for (i, e) in self.entries.iter().enumerate() {
            let versus = match &self.control {
                None => "",
                Some(c) if c.variable == e.variable => "control",
                Some(c) if e.score > c.score => "above",
                Some(_) => "below",
            };
            out.push_str(&format!("{},{},{:.12},{}\n", i + 1, e.variable, e.score, versus));
        }
        out
    }
}

/// Scores every candidate against `target`. The control is scored too (even
/// if not a candidate) so reports can draw its irrelevance line.
pub fn strength_ranking(
    network: &Network,
    target: &str,
    candidates: &[&str],
    control: Option<&str>,
    metric: StrengthMetric,
) -> Result<StrengthReport, AnalysisError> {
    network.require(target)?;
    if candidates.contains(&target) {
        return Err(AnalysisError::SameVariable(target.to_string()));
    }
    let mut entries = candidates
        .par_iter()
        .map(|&c| {
            Ok(StrengthEntry {
                variable: c.to_string(),
                score: influence_strength_with(network, c, target, metric)?,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.variable.cmp(&b.variable)));
    let control = match control {
        None => None,
        Some(c) => Some(StrengthEntry {
            variable: c.to_string(),
            score: match entries.iter().find(|e| e.variable == c) {
                Some(e) => e.score,
                None => influence_strength_with(network, c, target, metric)?,
            },
        }),
    };
    Ok(StrengthReport {
        target: target.to_string(),
        metric,
        entries,
        control,
    })
}

/// `P(target = target_state | source = s)` for each source state; `None`
/// where the source state itself has probability zero.
pub fn conditional_profile(
    network: &Network,
    target: &str,
    target_state: &str,
    source: &str,
) -> Result<Vec<(String, Option<f64>)>, AnalysisError> {
    let (s, t) = resolve_pair(network, source, target)?;
    let ts = network.variable(t).state_index(target_state).ok_or_else(|| {
        AnalysisError::UnknownState {
            variable: target.to_string(),
            state: target_state.to_string(),
        }
    })?;
    let joint = joint_marginal(network, &[s, t], &[]);
    let card = network.cardinality(t);
    Ok(network
        .variable(s)
        .states
        .iter()
        .zip(joint.values().chunks(card))
        .map(|(label, row)| {
            let w: f64 = row.iter().sum();
            (label.clone(), (w > 0.0).then(|| row[ts] / w))
        })
        .collect())
}
