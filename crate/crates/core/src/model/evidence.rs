use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ModelError, Network};

/// A partial assignment of variables to state labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Evidence {
    assignments: BTreeMap<String, String>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `variable = state`; a variable may be assigned only once.
    pub fn insert(&mut self, variable: &str, state: &str) -> Result<(), ModelError> {
        if self.assignments.contains_key(variable) {
            return Err(ModelError::DuplicateEvidence(variable.to_string()));
        }
        self.assignments
            .insert(variable.to_string(), state.to_string());
        Ok(())
    }

    /// Builder form of [`Evidence::insert`]. Panics on a repeated variable.
    pub fn with(mut self, variable: &str, state: &str) -> Self {
        self.insert(variable, state)
            .expect("variable assigned twice in evidence literal");
        self
    }

    /// Parses `Var=state` pairs separated by commas. Names are case-sensitive.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut evidence = Evidence::new();
        for (i, pair) in text.split(',').enumerate() {
            let pair = pair.trim();
            if pair.is_empty() {
                continue;
            }
            let (var, state) = pair.split_once('=').ok_or_else(|| ModelError::Syntax {
                line: 1,
                column: i + 1,
                message: format!("expected `Var=state`, found `{pair}`"),
            })?;
            evidence.insert(var.trim(), state.trim())?;
        }
        Ok(evidence)
    }

    /// Builds evidence from resolved `(variable index, state index)` pairs.
    pub fn from_indices(network: &Network, pairs: &[(usize, usize)]) -> Self {
        let mut evidence = Evidence::new();
        for &(v, s) in pairs {
            let spec = network.variable(v);
            evidence
                .assignments
                .insert(spec.name.clone(), spec.states[s].clone());
        }
        evidence
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.assignments.get(variable).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.assignments
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Resolves names and labels against a network, sorted by variable index.
    pub fn resolve(&self, network: &Network) -> Result<Vec<(usize, usize)>, ModelError> {
        let mut pairs = Vec::with_capacity(self.len());
        for (var, state) in self.iter() {
            let v = network.require(var)?;
            let s = network
                .variable(v)
                .state_index(state)
                .ok_or_else(|| ModelError::UnknownState {
                    variable: var.to_string(),
                    state: state.to_string(),
                })?;
            pairs.push((v, s));
        }
        pairs.sort_unstable();
        Ok(pairs)
    }
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// A distribution over one variable's states, in canonical state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub variable: String,
    pub states: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn probability(&self, state: &str) -> Option<f64> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|i| self.probabilities[i])
    }
}
