use std::collections::BTreeMap;

use super::LearningError;
use crate::data::{OUTCOME, YES};
use crate::model::VariableSpec;

pub const DEFAULT_ESS: f64 = 2.0;
/// Prior probability of offending before any data is seen.
pub const DEFAULT_OUTCOME_PRIOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
enum Mean {
    Shared(Vec<f64>),
    PerConfiguration(Vec<Vec<f64>>),
}

/// Dirichlet prior over every CPT row, given as a mean distribution and an
/// equivalent sample size shared by all rows. Variables without an explicit
/// mean get the uniform distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    ess: f64,
    means: BTreeMap<String, Mean>,
}

fn check_distribution(variable: &str, p: &[f64]) -> Result<(), LearningError> {
    let invalid = |reason: String| LearningError::InvalidPrior {
        variable: variable.to_string(),
        reason,
    };
    if p.len() < 2 {
        return Err(invalid("a mean needs at least two entries".into()));
    }
    if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid(format!("entry {x} outside [0, 1]")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("mean sums to {sum}")));
    }
    Ok(())
}

impl DirichletPrior {
    pub fn uniform(ess: f64) -> Result<Self, LearningError> {
        if !(ess.is_finite() && ess > 0.0) {
            return Err(LearningError::InvalidConfig(format!(
                "equivalent sample size must be positive, got {ess}"
            )));
        }
        Ok(DirichletPrior {
            ess,
            means: BTreeMap::new(),
        })
    }

    /// Uniform everywhere except `P(Previous_CB_Offending = Yes) = prior_p`
    /// when the outcome is among `variables`.
    pub fn standard(variables: &[VariableSpec], prior_p: f64, ess: f64) -> Result<Self, LearningError> {
        let prior = Self::uniform(ess)?;
        match variables.iter().find(|v| v.name == OUTCOME) {
            Some(outcome) => prior.with_state_probability(outcome, YES, prior_p),
            None => Ok(prior),
        }
    }

    /// Same mean for every parent configuration.
    pub fn with_mean(mut self, variable: &str, mean: Vec<f64>) -> Result<Self, LearningError> {
        check_distribution(variable, &mean)?;
        self.means.insert(variable.to_string(), Mean::Shared(mean));
        Ok(self)
    }

    /// One mean per parent configuration, in CPT row order.
    pub fn with_configuration_means(
        mut self,
        variable: &str,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, LearningError> {
        for row in &rows {
            check_distribution(variable, row)?;
        }
        self.means
            .insert(variable.to_string(), Mean::PerConfiguration(rows));
        Ok(self)
    }

    /// Puts mass `p` on `state` and shares the rest evenly over the others.
    pub fn with_state_probability(
        self,
        spec: &VariableSpec,
        state: &str,
        p: f64,
    ) -> Result<Self, LearningError> {
        let s = spec.state_index(state).ok_or_else(|| LearningError::InvalidPrior {
            variable: spec.name.clone(),
            reason: format!("unknown state `{state}`"),
        })?;
        if !(p > 0.0 && p < 1.0) {
            return Err(LearningError::InvalidPrior {
                variable: spec.name.clone(),
                reason: format!("prior probability {p} outside (0, 1)"),
            });
        }
        let rest = (1.0 - p) / (spec.cardinality() - 1) as f64;
        let mean = (0..spec.cardinality())
            .map(|i| if i == s { p } else { rest })
            .collect();
        self.with_mean(&spec.name, mean)
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    /// Mean distribution of every row of `spec`'s CPT.
    pub fn row_means(&self, spec: &VariableSpec, rows: usize) -> Result<Vec<Vec<f64>>, LearningError> {
        let card = spec.cardinality();
        let mismatch = |reason: String| LearningError::InvalidPrior {
            variable: spec.name.clone(),
            reason,
        };
        match self.means.get(&spec.name) {
            None => Ok(vec![vec![1.0 / card as f64; card]; rows]),
            Some(Mean::Shared(m)) => {
                if m.len() != card {
                    return Err(mismatch(format!("{} entries for {card} states", m.len())));
                }
                Ok(vec![m.clone(); rows])
            }
            Some(Mean::PerConfiguration(r)) => {
                if r.len() != rows {
                    return Err(mismatch(format!("{} rows for {rows} parent configurations", r.len())));
                }
                if let Some(bad) = r.iter().find(|row| row.len() != card) {
                    return Err(mismatch(format!("{} entries for {card} states", bad.len())));
                }
                Ok(r.clone())
            }
        }
    }

    /// Average prior mass on `state` across the rows of `spec`'s CPT.
    pub(crate) fn average_mass(&self, spec: &VariableSpec, rows: usize, state: usize) -> f64 {
        self.row_means(spec, rows)
            .map(|m| m.iter().map(|r| r[state]).sum::<f64>() / rows as f64)
            .unwrap_or(1.0 / spec.cardinality() as f64)
    }
}
