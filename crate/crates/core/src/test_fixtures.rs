//! Small hand-checkable networks shared by unit tests.

use crate::model::{Cpt, DagStructure, Network, VariableKind, VariableSpec};

pub fn binary(name: &str) -> VariableSpec {
    VariableSpec::new(name, &["0", "1"], VariableKind::Demographic)
}

pub fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

pub fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
    list.iter().map(|(p, c)| (p.to_string(), c.to_string())).collect()
}

/// A -> B with P(A=1) = 0.3, P(B=1 | A=1) = 0.9, P(B=1 | A=0) = 0.2.
pub fn chain() -> Network {
    let dag = DagStructure::new(names(&["A", "B"]), edges(&[("A", "B")])).unwrap();
    Network::new(
        vec![binary("A"), binary("B")],
        dag,
        vec![
            Cpt::new("A", &[], vec![vec![0.7, 0.3]]),
            Cpt::new("B", &["A"], vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
        ],
    )
    .unwrap()
}

/// A single binary node with P(A=1) = 0.3.
pub fn single() -> Network {
    let dag = DagStructure::new(names(&["A"]), vec![]).unwrap();
    Network::new(vec![binary("A")], dag, vec![Cpt::new("A", &[], vec![vec![0.7, 0.3]])]).unwrap()
}

/// S -> T where T copies S, S uniform; plus an isolated binary X.
pub fn copy_edge() -> Network {
    let dag = DagStructure::new(names(&["S", "T", "X"]), edges(&[("S", "T")])).unwrap();
    Network::new(
        vec![binary("S"), binary("T"), binary("X")],
        dag,
        vec![
            Cpt::new("S", &[], vec![vec![0.5, 0.5]]),
            Cpt::new("T", &["S"], vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            Cpt::new("X", &[], vec![vec![0.4, 0.6]]),
        ],
    )
    .unwrap()
}
