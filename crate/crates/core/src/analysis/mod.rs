//! Strength-of-influence ranking, Bayes-factor thresholds, exhaustive
//! multi-factor risk search and rank comparison.

mod bayes;
mod divergence;
mod multifactor;
mod spearman;
mod strength;

use thiserror::Error;

use crate::inference::InferenceError;
use crate::model::ModelError;

pub use bayes::{bayes_factor, bf_threshold_posterior, STRONG_BF, SUBSTANTIAL_BF};
pub use divergence::{entropy, js_distance, js_divergence};
pub use multifactor::{
    combination_count, multifactor_search, risk_profiles, EvidenceSet, FactorFrequency, KMaximum,
    MultiFactorResult, RiskProfile, RiskProfileSet, SearchConfig, DEFAULT_MAX_EVALUATIONS,
};
pub use spearman::{average_ranks, spearman, RankComparison};
pub use strength::{
    conditional_profile, influence_strength, influence_strength_with, strength_ranking,
    StrengthEntry, StrengthMetric, StrengthReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{state}` is not a state of `{variable}`")]
    UnknownState { variable: String, state: String },
    #[error("`{0}` cannot be both source and target")]
    SameVariable(String),
    #[error("candidate pool contains the target `{0}`")]
    TargetInPool(String),
    #[error("candidate pool lists `{0}` twice")]
    DuplicateInPool(String),
    #[error("evidence sizes {start}..={end} are not within 1..={pool}")]
    InvalidRange { start: usize, end: usize, pool: usize },
    #[error("search would evaluate about {estimate} combinations, above the cap of {cap}")]
    PoolTooLarge { estimate: u128, cap: u64 },
    #[error("{0}")]
    Domain(String),
    #[error("score lists have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two ranked items, got {0}")]
    TooFewItems(usize),
    #[error("a score list is constant; rank correlation is undefined")]
    ConstantScores,
    #[error(transparent)]
    Inference(InferenceError),
}

impl From<ModelError> for AnalysisError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownVariable(v) => AnalysisError::UnknownVariable(v),
            ModelError::UnknownState { variable, state } => AnalysisError::UnknownState { variable, state },
            other => AnalysisError::Inference(InferenceError::Model(other)),
        }
    }
}

impl From<InferenceError> for AnalysisError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::UnknownVariable(v) => AnalysisError::UnknownVariable(v),
            InferenceError::UnknownState { variable, state } => AnalysisError::UnknownState { variable, state },
            other => AnalysisError::Inference(other),
        }
    }
}
