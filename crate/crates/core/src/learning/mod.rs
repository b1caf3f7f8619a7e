//! CPT estimation: closed-form Dirichlet posterior means for observed data,
//! and EM when some variables are latent.

mod em;
mod prior;

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::Dataset;
use crate::inference::{evidence_probability_indexed, joint_probability_indexed};
use crate::model::{Cpt, DagStructure, ModelError, Network, VariableSpec};

pub use em::{em_fit, EmConfig, EmFit, EmTrace};
pub use prior::{DirichletPrior, DEFAULT_ESS, DEFAULT_OUTCOME_PRIOR};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearningError {
    #[error("dataset does not match the model: {0}")]
    SchemaMismatch(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid prior for `{variable}`: {reason}")]
    InvalidPrior { variable: String, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sum of log-probabilities of the observed part of each record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    /// `-inf` if any record is impossible under the model.
    pub value: f64,
    pub zero_probability_records: usize,
}

/// Network with uniform CPTs; carries the index bookkeeping for learning.
pub(crate) fn skeleton(variables: &[VariableSpec], dag: &DagStructure) -> Result<Network, LearningError> {
    let pos = |name: &str| variables.iter().position(|v| v.name == name);
    let mut cpts = Vec::with_capacity(variables.len());
    for v in variables {
        let mut parents: Vec<usize> = dag
            .parents_of(&v.name)
            .map(|p| pos(p).ok_or_else(|| ModelError::UnknownNode(p.to_string())))
            .collect::<Result<_, _>>()?;
        parents.sort_unstable();
        let rows: usize = parents.iter().map(|&p| variables[p].cardinality()).product();
        let names: Vec<&str> = parents.iter().map(|&p| variables[p].name.as_str()).collect();
        let card = v.cardinality();
        cpts.push(Cpt::new(v.name.as_str(), &names, vec![vec![1.0 / card as f64; card]; rows]));
    }
    Ok(Network::new(variables.to_vec(), dag.clone(), cpts)?)
}

/// For each network variable, the dataset column holding it. With
/// `require` set, every variable outside `latent` must have a column.
pub(crate) fn column_map(
    network: &Network,
    dataset: &Dataset,
    latent: &[usize],
    require: bool,
) -> Result<Vec<Option<usize>>, LearningError> {
    let mut map = vec![None; network.len()];
    for (c, spec) in dataset.variables().iter().enumerate() {
        let i = network.index_of(&spec.name).ok_or_else(|| {
            LearningError::SchemaMismatch(format!("column `{}` is not a network variable", spec.name))
        })?;
        if network.variable(i).states != spec.states {
            return Err(LearningError::SchemaMismatch(format!(
                "states of `{}` differ between dataset and model",
                spec.name
            )));
        }
        if latent.contains(&i) {
            return Err(LearningError::SchemaMismatch(format!(
                "latent variable `{}` has a data column",
                spec.name
            )));
        }
        map[i] = Some(c);
    }
    if require {
        if let Some(i) = (0..network.len()).find(|i| map[*i].is_none() && !latent.contains(i)) {
            return Err(LearningError::SchemaMismatch(format!(
                "no data column for `{}`",
                network.variable(i).name
            )));
        }
    }
    Ok(map)
}

/// Distinct records laid out in network order, with multiplicities, in a
/// fixed (sorted) order so every reduction over them is reproducible.
pub(crate) fn patterns(dataset: &Dataset, map: &[Option<usize>]) -> Vec<(Vec<Option<usize>>, f64)> {
    let mut counts: BTreeMap<Vec<Option<usize>>, usize> = BTreeMap::new();
    for r in dataset.records() {
        let values = map.iter().map(|c| c.and_then(|c| r.values[c])).collect();
        *counts.entry(values).or_default() += 1;
    }
    counts.into_iter().map(|(k, n)| (k, n as f64)).collect()
}

/// Dirichlet posterior-mean CPTs: row entry `(ESS·m_s + n_s) / (ESS + n)`,
/// counting only records where the child and all its parents are observed.
/// A row without data returns the prior mean.
pub fn fit_cpts(
    variables: &[VariableSpec],
    dag: &DagStructure,
    dataset: &Dataset,
    prior: &DirichletPrior,
) -> Result<Network, LearningError> {
    let net = skeleton(variables, dag)?;
    let map = column_map(&net, dataset, &[], true)?;
    let data = patterns(dataset, &map);
    let cpts = (0..net.len())
        .into_par_iter()
        .map(|i| {
            let card = net.cardinality(i);
            let rows = net.cpt(i).rows.len();
            let means = prior.row_means(net.variable(i), rows)?;
            let mut counts = vec![vec![0.0; card]; rows];
            'records: for (values, w) in &data {
                let Some(s) = values[i] else { continue };
                let mut row = 0;
                for &p in net.parents(i) {
                    let Some(ps) = values[p] else { continue 'records };
                    row = row * net.cardinality(p) + ps;
                }
                counts[row][s] += w;
            }
            let rows = posterior_mean_rows(&means, &counts, prior.ess());
            let cpt = net.cpt(i);
            Ok(Cpt {
                variable: cpt.variable.clone(),
                parents: cpt.parents.clone(),
                rows,
            })
        })
        .collect::<Result<Vec<_>, LearningError>>()?;
    Ok(Network::new(variables.to_vec(), net.dag().clone(), cpts)?)
}

pub(crate) fn posterior_mean_rows(means: &[Vec<f64>], counts: &[Vec<f64>], ess: f64) -> Vec<Vec<f64>> {
    means
        .iter()
        .zip(counts)
        .map(|(m, c)| {
            let n: f64 = c.iter().sum();
            m.iter()
                .zip(c)
                .map(|(m, c)| (ess * m + c) / (ess + n))
                .collect()
        })
        .collect()
}

/// Log-probability of the dataset, each record's unobserved variables
/// marginalized out. Dataset columns must be network variables; network
/// variables without a column count as unobserved.
pub fn log_likelihood(network: &Network, dataset: &Dataset) -> Result<LogLikelihood, LearningError> {
    let map = column_map(network, dataset, &[], false)?;
    let data = patterns(dataset, &map);
    let terms: Vec<(f64, f64)> = data
        .par_iter()
        .map(|(values, w)| {
            let p = if values.iter().all(Option::is_some) {
                let full: Vec<usize> = values.iter().map(|v| v.unwrap()).collect();
                joint_probability_indexed(network, &full)
            } else {
                let evidence: Vec<(usize, usize)> = values
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| v.map(|s| (i, s)))
                    .collect();
                evidence_probability_indexed(network, &evidence)
            };
            (p, *w)
        })
        .collect();
    let mut value = 0.0;
    let mut zero = 0;
    for (p, w) in terms {
        if p > 0.0 {
            value += w * p.ln();
        } else {
            zero += w as usize;
        }
    }
    if zero > 0 {
        value = f64::NEG_INFINITY;
    }
    Ok(LogLikelihood {
        value,
        zero_probability_records: zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Record};
    use crate::model::VariableKind;
    use crate::test_fixtures::chain;
    use approx::assert_abs_diff_eq;

    fn yes_no() -> Vec<VariableSpec> {
        vec![VariableSpec::new("Previous_CB_Offending", &["Yes", "No"], VariableKind::Outcome)]
    }

    fn root_data(vars: &[VariableSpec], yes: usize, n: usize) -> Dataset {
        let records = (0..n)
            .map(|i| Record {
                values: vec![Some(if i < yes { 0 } else { 1 })],
                response_ms: vec![],
                honesty: None,
            })
            .collect();
        Dataset::new(vars.to_vec(), vec![], false, records, "test").unwrap()
    }

    fn root_dag() -> DagStructure {
        DagStructure::new(vec!["Previous_CB_Offending".into()], vec![]).unwrap()
    }

    #[test]
    fn closed_form_root_fits() {
        let vars = yes_no();
        let prior = DirichletPrior::standard(&vars, 0.1, 2.0).unwrap();
        let fit = |yes, n| fit_cpts(&vars, &root_dag(), &root_data(&vars, yes, n), &prior).unwrap();
        assert_eq!(fit(0, 0).cpt(0).rows[0][0], 0.1);
        assert_abs_diff_eq!(fit(3, 10).cpt(0).rows[0][0], 0.266_666_666_666_666_66, epsilon = 1e-15);
        assert_abs_diff_eq!(fit(1, 10).cpt(0).rows[0][0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn listwise_deletion_per_family() {
        let net = chain();
        let rec = |a: Option<usize>, b: Option<usize>| Record {
            values: vec![a, b],
            response_ms: vec![],
            honesty: None,
        };
        let data = Dataset::new(
            net.variables().to_vec(),
            vec![],
            false,
            vec![rec(Some(1), None), rec(Some(1), Some(1)), rec(None, Some(0))],
            "t",
        )
        .unwrap();
        let prior = DirichletPrior::uniform(2.0).unwrap();
        let fitted = fit_cpts(net.variables(), net.dag(), &data, &prior).unwrap();
        // A: two observations of state 1
        assert_abs_diff_eq!(fitted.cpt(0).rows[0][1], 3.0 / 4.0, epsilon = 1e-15);
        // B | A=0 has no complete record; B | A=1 has one
        assert_eq!(fitted.cpt(1).rows[0], vec![0.5, 0.5]);
        assert_abs_diff_eq!(fitted.cpt(1).rows[1][1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn tiny_ess_approaches_frequencies() {
        let vars = yes_no();
        let prior = DirichletPrior::uniform(1e-9).unwrap();
        let net = fit_cpts(&vars, &root_dag(), &root_data(&vars, 3, 10), &prior).unwrap();
        assert_abs_diff_eq!(net.cpt(0).rows[0][0], 0.3, epsilon = 1e-9);
    }

    #[test]
    fn schema_mismatches() {
        let net = chain();
        let prior = DirichletPrior::uniform(2.0).unwrap();
        let only_a = Dataset::new(vec![net.variable(0).clone()], vec![], false, vec![], "t").unwrap();
        assert!(matches!(
            fit_cpts(net.variables(), net.dag(), &only_a, &prior),
            Err(LearningError::SchemaMismatch(_))
        ));
        let other = Dataset::new(
            vec![VariableSpec::new("Z", &["0", "1"], VariableKind::Game)],
            vec![],
            false,
            vec![],
            "t",
        )
        .unwrap();
        assert!(matches!(log_likelihood(&net, &other), Err(LearningError::SchemaMismatch(_))));
    }

    #[test]
    fn log_likelihood_values() {
        let net = chain();
        let empty = Dataset::new(net.variables().to_vec(), vec![], false, vec![], "t").unwrap();
        assert_eq!(log_likelihood(&net, &empty).unwrap().value, 0.0);
        let one = empty.with_records(vec![Record {
            values: vec![Some(1), Some(1)],
            response_ms: vec![],
            honesty: None,
        }]);
        let ll = log_likelihood(&net, &one).unwrap();
        assert_abs_diff_eq!(ll.value, -1.309_333_319_983_762_2, epsilon = 1e-12);
        assert_eq!(ll.zero_probability_records, 0);
        // observing only B marginalizes A
        let partial = empty.with_records(vec![Record {
            values: vec![None, Some(1)],
            response_ms: vec![],
            honesty: None,
        }]);
        assert_abs_diff_eq!(log_likelihood(&net, &partial).unwrap().value, 0.41f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn impossible_records_are_reported() {
        let net = crate::test_fixtures::copy_edge();
        let data = Dataset::new(
            net.variables().to_vec(),
            vec![],
            false,
            vec![Record {
                values: vec![Some(0), Some(1), Some(0)],
                response_ms: vec![],
                honesty: None,
            }],
            "t",
        )
        .unwrap();
        let ll = log_likelihood(&net, &data).unwrap();
        assert_eq!(ll.value, f64::NEG_INFINITY);
        assert_eq!(ll.zero_probability_records, 1);
    }
}
