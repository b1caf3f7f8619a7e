//! Exact queries on a [`Network`] by variable elimination, plus ancestral
//! sampling.
//!
//! Every query first restricts the network to the ancestors of the query and
//! evidence variables (non-ancestral nodes sum to one), reduces each CPT by
//! the evidence, then eliminates the remaining hidden variables greedily by
//! minimum degree in the current interaction graph, breaking ties by
//! declaration order. All functions are pure; nothing is cached between calls.

mod factor;
mod sampling;

use thiserror::Error;

use crate::model::{Distribution, Evidence, ModelError, Network};

pub use factor::Factor;
pub use sampling::{ancestral_sample, SampleBatch, SAMPLER_ID};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{state}` is not a state of `{variable}`")]
    UnknownState { variable: String, state: String },
    #[error("assignment does not cover {}", .missing.join(", "))]
    IncompleteAssignment { missing: Vec<String> },
    #[error("evidence `{evidence}` has probability zero")]
    ZeroProbabilityEvidence { evidence: String },
    #[error("target `{0}` is part of the evidence")]
    TargetInEvidence(String),
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for InferenceError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownVariable(v) => InferenceError::UnknownVariable(v),
            ModelError::UnknownState { variable, state } => {
                InferenceError::UnknownState { variable, state }
            }
            other => InferenceError::Model(other),
        }
    }
}

/// The CPT of node `i` as a factor over `parents ++ [i]`.
pub fn cpt_factor(network: &Network, i: usize) -> Factor {
    let mut scope = network.parents(i).to_vec();
    scope.push(i);
    let cards = scope.iter().map(|&v| network.cardinality(v)).collect();
    let values = network.cpt(i).rows.iter().flatten().copied().collect();
    Factor::new(scope, cards, values)
}

/// Sums every variable outside `keep` out of the product of `factors`.
/// The result's scope is exactly `keep`, in that order.
pub fn eliminate(mut factors: Vec<Factor>, keep: &[usize]) -> Factor {
    loop {
        let mut hidden: Vec<usize> = factors
            .iter()
            .flat_map(|f| f.scope().iter().copied())
            .filter(|v| !keep.contains(v))
            .collect();
        hidden.sort_unstable();
        hidden.dedup();
        if hidden.is_empty() {
            break;
        }
        let degree = |v: usize| {
            let mut nb: Vec<usize> = factors
                .iter()
                .filter(|f| f.contains(v))
                .flat_map(|f| f.scope().iter().copied())
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb.len()
        };
        let var = *hidden
            .iter()
            .min_by_key(|&&v| (degree(v), v))
            .expect("non-empty");
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(var));
        let merged = touching
            .iter()
            .skip(1)
            .fold(touching[0].clone(), |acc, f| acc.product(f));
        factors = rest;
        factors.push(merged.sum_out(var));
    }
    let joint = factors
        .iter()
        .fold(Factor::unit(), |acc, f| acc.product(f));
    assert!(
        keep.iter().all(|v| joint.contains(*v)),
        "query variable missing from factors"
    );
    joint.permuted(keep)
}

/// Unnormalized joint `P(vars, evidence)` as a factor with scope `vars`.
///
/// `vars` must be distinct and disjoint from the evidence variables.
pub fn joint_marginal(network: &Network, vars: &[usize], evidence: &[(usize, usize)]) -> Factor {
    let relevant =
        network.ancestral_mask(vars.iter().copied().chain(evidence.iter().map(|&(v, _)| v)));
    let factors = (0..network.len())
        .filter(|&i| relevant[i])
        .map(|i| {
            evidence
                .iter()
                .fold(cpt_factor(network, i), |f, &(v, s)| f.reduce(v, s))
        })
        .collect();
    eliminate(factors, vars)
}

/// Probability of a complete assignment: the product of one CPT entry per
/// node.
pub fn joint_probability(network: &Network, assignment: &Evidence) -> Result<f64, InferenceError> {
    let pairs = assignment.resolve(network)?;
    if pairs.len() != network.len() {
        let missing = network
            .variables()
            .iter()
            .filter(|v| assignment.get(&v.name).is_none())
            .map(|v| v.name.clone())
            .collect();
        return Err(InferenceError::IncompleteAssignment { missing });
    }
    let states: Vec<usize> = pairs.iter().map(|&(_, s)| s).collect();
    Ok(joint_probability_indexed(network, &states))
}

/// [`joint_probability`] on a state vector indexed like the network's
/// variables.
pub fn joint_probability_indexed(network: &Network, states: &[usize]) -> f64 {
    (0..network.len())
        .map(|i| network.conditional(i, states[i], states))
        .product()
}

/// Exact `P(target | evidence)`.
pub fn posterior(
    network: &Network,
    target: &str,
    evidence: &Evidence,
) -> Result<Distribution, InferenceError> {
    let t = network.require(target)?;
    let pairs = evidence.resolve(network)?;
    let probabilities = posterior_indexed(network, t, &pairs).map_err(|e| match e {
        InferenceError::ZeroProbabilityEvidence { .. } => InferenceError::ZeroProbabilityEvidence {
            evidence: evidence.to_string(),
        },
        other => other,
    })?;
    let spec = network.variable(t);
    Ok(Distribution {
        variable: spec.name.clone(),
        states: spec.states.clone(),
        probabilities,
    })
}

/// Index-based [`posterior`] for hot loops.
pub fn posterior_indexed(
    network: &Network,
    target: usize,
    evidence: &[(usize, usize)],
) -> Result<Vec<f64>, InferenceError> {
    if evidence.iter().any(|&(v, _)| v == target) {
        return Err(InferenceError::TargetInEvidence(
            network.variable(target).name.clone(),
        ));
    }
    let joint = joint_marginal(network, &[target], evidence);
    let z = joint.total();
    if z <= 0.0 {
        return Err(InferenceError::ZeroProbabilityEvidence {
            evidence: Evidence::from_indices(network, evidence).to_string(),
        });
    }
    Ok(joint.into_values().into_iter().map(|p| p / z).collect())
}

/// Prior marginal of one variable.
pub fn marginal(network: &Network, variable: &str) -> Result<Distribution, InferenceError> {
    posterior(network, variable, &Evidence::new())
}

/// Exact `P(evidence)`; 1 for empty evidence.
pub fn evidence_probability(network: &Network, evidence: &Evidence) -> Result<f64, InferenceError> {
    let pairs = evidence.resolve(network)?;
    Ok(evidence_probability_indexed(network, &pairs))
}

pub fn evidence_probability_indexed(network: &Network, evidence: &[(usize, usize)]) -> f64 {
    if evidence.is_empty() {
        return 1.0;
    }
    joint_marginal(network, &[], evidence).values()[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cpt, DagStructure, VariableKind, VariableSpec};
    use crate::test_fixtures::{chain, copy_edge, names, single};
    use approx::assert_abs_diff_eq;

    #[test]
    fn joint_of_chain() {
        let net = chain();
        let p = joint_probability(&net, &Evidence::new().with("A", "1").with("B", "1")).unwrap();
        assert_abs_diff_eq!(p, 0.27, epsilon = 1e-15);
        let p = joint_probability(&single(), &Evidence::new().with("A", "0")).unwrap();
        assert_abs_diff_eq!(p, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn joint_with_zero_factor() {
        let net = copy_edge();
        let e = Evidence::new().with("S", "0").with("T", "1").with("X", "1");
        assert_eq!(joint_probability(&net, &e).unwrap(), 0.0);
    }

    #[test]
    fn joint_errors() {
        let net = chain();
        assert!(matches!(
            joint_probability(&net, &Evidence::new().with("A", "1")),
            Err(InferenceError::IncompleteAssignment { missing }) if missing == vec!["B".to_string()]
        ));
        assert!(matches!(
            joint_probability(&net, &Evidence::new().with("A", "7").with("B", "1")),
            Err(InferenceError::UnknownState { .. })
        ));
    }

    #[test]
    fn posterior_of_chain() {
        let net = chain();
        let d = posterior(&net, "A", &Evidence::new().with("B", "1")).unwrap();
        // 0.27 / 0.41 by enumeration
        assert_abs_diff_eq!(d.probabilities[1], 0.658536585365853_7, epsilon = 1e-12);
        assert_abs_diff_eq!(d.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let d = posterior(&single(), "A", &Evidence::new()).unwrap();
        assert_eq!(d.probabilities, vec![0.7, 0.3]);
    }

    #[test]
    fn zero_probability_evidence() {
        let net = copy_edge();
        let e = Evidence::new().with("S", "0").with("T", "1");
        assert!(matches!(
            posterior(&net, "X", &e),
            Err(InferenceError::ZeroProbabilityEvidence { evidence }) if evidence == "S=0,T=1"
        ));
        assert_eq!(evidence_probability(&net, &e).unwrap(), 0.0);
    }

    #[test]
    fn posterior_errors() {
        let net = chain();
        assert!(matches!(
            posterior(&net, "Z", &Evidence::new()),
            Err(InferenceError::UnknownVariable(_))
        ));
        assert!(matches!(
            posterior(&net, "A", &Evidence::new().with("A", "1")),
            Err(InferenceError::TargetInEvidence(_))
        ));
    }

    #[test]
    fn marginals() {
        let net = chain();
        let b = marginal(&net, "B").unwrap();
        assert_abs_diff_eq!(b.probabilities[1], 0.41, epsilon = 1e-15);
        assert_eq!(marginal(&net, "A").unwrap().probabilities, vec![0.7, 0.3]);
        let copy = copy_edge();
        assert_eq!(
            marginal(&copy, "T").unwrap().probabilities,
            marginal(&copy, "S").unwrap().probabilities
        );
    }

    #[test]
    fn evidence_probabilities() {
        let net = chain();
        assert_eq!(evidence_probability(&net, &Evidence::new()).unwrap(), 1.0);
        let p = evidence_probability(&net, &Evidence::new().with("B", "1")).unwrap();
        assert_abs_diff_eq!(p, 0.41, epsilon = 1e-15);
        let p = evidence_probability(&net, &Evidence::new().with("A", "1").with("B", "1")).unwrap();
        assert_abs_diff_eq!(p, 0.27, epsilon = 1e-15);
    }

    #[test]
    fn explaining_away_in_collider() {
        // A -> C <- B, C = A or B; observing C=1 and A=1 lowers belief in B.
        let bin = |n: &str| VariableSpec::new(n, &["0", "1"], VariableKind::Game);
        let dag = DagStructure::new(
            names(&["A", "B", "C"]),
            vec![("A".into(), "C".into()), ("B".into(), "C".into())],
        )
        .unwrap();
        let net = Network::new(
            vec![bin("A"), bin("B"), bin("C")],
            dag,
            vec![
                Cpt::new("A", &[], vec![vec![0.5, 0.5]]),
                Cpt::new("B", &[], vec![vec![0.5, 0.5]]),
                Cpt::new(
                    "C",
                    &["A", "B"],
                    vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]],
                ),
            ],
        )
        .unwrap();
        let given_c = posterior(&net, "B", &Evidence::new().with("C", "1")).unwrap();
        let given_ac = posterior(&net, "B", &Evidence::new().with("C", "1").with("A", "1")).unwrap();
        assert_abs_diff_eq!(given_c.probabilities[1], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(given_ac.probabilities[1], 0.5, epsilon = 1e-12);
    }
}
