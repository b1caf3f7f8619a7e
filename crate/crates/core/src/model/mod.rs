//! Discrete Bayesian network representation.
//!
//! A [`Network`] is a validated, immutable bundle of variable declarations, a
//! DAG over them and one conditional probability table per node. Everything
//! downstream (inference, learning, analysis) treats it as the single source
//! of truth for the joint distribution.
//!
//! Conventions shared by every table in the crate:
//!
//! - state order is the declaration order of a variable's `states`;
//! - CPT parents appear in schema declaration order;
//! - parent configurations are enumerated row-major with the last parent's
//!   state varying fastest.

mod error;
mod evidence;
mod format;

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

pub use error::ModelError;
pub use evidence::{Distribution, Evidence};
pub use format::{parse_model, parse_structure, serialize_model};

/// Tolerance on CPT row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Role of a variable in the study design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Demographic,
    Psychological,
    Game,
    Outcome,
    /// Response-time and honesty columns; never part of a network.
    Meta,
}

/// A categorical variable with an ordered list of state labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub states: Vec<String>,
    pub kind: VariableKind,
}

impl VariableSpec {
    pub fn new<S: Into<String>>(name: S, states: &[&str], kind: VariableKind) -> Self {
        VariableSpec {
            name: name.into(),
            states: states.iter().map(|s| s.to_string()).collect(),
            kind,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.states.len() < 2 {
            return Err(ModelError::TooFewStates(self.name.clone()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s.as_str()) {
                return Err(ModelError::DuplicateState {
                    variable: self.name.clone(),
                    state: s.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Checks a list of variables for the schema-level invariants: unique names,
/// at least two unique states each.
pub fn validate_schema(variables: &[VariableSpec]) -> Result<(), ModelError> {
    let mut names = BTreeSet::new();
    for v in variables {
        if !names.insert(v.name.as_str()) {
            return Err(ModelError::DuplicateVariable(v.name.clone()));
        }
        v.validate()?;
    }
    Ok(())
}

/// Directed acyclic graph over variable names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagStructure {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

impl DagStructure {
    /// Validates and builds a DAG. Nodes keep the given order, which is used
    /// as the declaration order for tie-breaking.
    pub fn new(nodes: Vec<String>, edges: Vec<(String, String)>) -> Result<Self, ModelError> {
        let index: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if index.len() != nodes.len() {
            let mut seen = BTreeSet::new();
            let dup = nodes.iter().find(|n| !seen.insert(n.as_str())).unwrap();
            return Err(ModelError::DuplicateVariable(dup.clone()));
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen_edges = BTreeSet::new();
        for (p, c) in &edges {
            let pi = *index
                .get(p.as_str())
                .ok_or_else(|| ModelError::UnknownNode(p.clone()))?;
            let ci = *index
                .get(c.as_str())
                .ok_or_else(|| ModelError::UnknownNode(c.clone()))?;
            if pi == ci {
                return Err(ModelError::SelfLoop(p.clone()));
            }
            if !seen_edges.insert((pi, ci)) {
                return Err(ModelError::DuplicateEdge {
                    parent: p.clone(),
                    child: c.clone(),
                });
            }
            adjacency[pi].push(ci);
        }
        if let Some(cycle) = find_cycle(&adjacency) {
            return Err(ModelError::CycleDetected {
                cycle: cycle.into_iter().map(|i| nodes[i].clone()).collect(),
            });
        }
        Ok(DagStructure { nodes, edges })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    /// Parents of `node`, in the order their edges were declared.
    pub fn parents_of<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |(_, c)| c == node)
            .map(|(p, _)| p.as_str())
    }
}

// Iterative DFS; returns the nodes of the first back-edge cycle, closed
// (first node repeated at the end).
fn find_cycle(adjacency: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = adjacency.len();
    let mut mark = vec![Mark::New; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        mark[root] = Mark::Active;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < adjacency[node].len() {
                let child = adjacency[node][*next];
                *next += 1;
                match mark[child] {
                    Mark::New => {
                        mark[child] = Mark::Active;
                        stack.push((child, 0));
                    }
                    Mark::Active => {
                        let start = stack.iter().position(|&(v, _)| v == child).unwrap();
                        let mut cycle: Vec<usize> = stack[start..].iter().map(|&(v, _)| v).collect();
                        cycle.push(child);
                        return Some(cycle);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

/// Conditional probability table of one variable given its parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub variable: String,
    pub parents: Vec<String>,
    /// One distribution per parent configuration.
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new<S: Into<String>>(variable: S, parents: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Cpt {
            variable: variable.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            rows,
        }
    }
}

/// A validated discrete Bayesian network.
#[derive(Debug, Clone)]
pub struct Network {
    variables: Vec<VariableSpec>,
    dag: DagStructure,
    cpts: Vec<Cpt>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.dag == other.dag && self.cpts == other.cpts
    }
}

impl Network {
    /// Builds and validates a network. `cpts` may be given in any order but
    /// each CPT's parents must be listed in schema declaration order.
    pub fn new(
        variables: Vec<VariableSpec>,
        dag: DagStructure,
        cpts: Vec<Cpt>,
    ) -> Result<Self, ModelError> {
        validate_schema(&variables)?;
        if let Some(v) = variables.iter().find(|v| v.kind == VariableKind::Meta) {
            return Err(ModelError::MetaVariable(v.name.clone()));
        }
        let index: HashMap<String, usize> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();

        for node in dag.nodes() {
            if !index.contains_key(node) {
                return Err(ModelError::UnknownNode(node.clone()));
            }
        }
        if dag.nodes().len() != variables.len() {
            let missing = variables
                .iter()
                .find(|v| !dag.nodes().contains(&v.name))
                .map(|v| v.name.clone())
                .unwrap_or_default();
            return Err(ModelError::ShapeMismatch {
                variable: missing,
                detail: "variable is not a node of the DAG".into(),
            });
        }
        // Canonical node order is declaration order.
        let dag = DagStructure {
            nodes: variables.iter().map(|v| v.name.clone()).collect(),
            edges: dag.edges,
        };

        let n = variables.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (p, c) in dag.edges() {
            let (pi, ci) = (index[p], index[c]);
            parents[ci].push(pi);
            children[pi].push(ci);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        let mut slots: Vec<Option<Cpt>> = vec![None; n];
        for cpt in cpts {
            let i = *index
                .get(&cpt.variable)
                .ok_or_else(|| ModelError::UnknownCptVariable(cpt.variable.clone()))?;
            if slots[i].is_some() {
                return Err(ModelError::DuplicateCpt(cpt.variable.clone()));
            }
            slots[i] = Some(cpt);
        }
        let mut ordered = Vec::with_capacity(n);
        for (i, slot) in slots.into_iter().enumerate() {
            let cpt = slot.ok_or_else(|| ModelError::MissingCpt(variables[i].name.clone()))?;
            check_cpt(&cpt, &variables, &parents[i])?;
            ordered.push(cpt);
        }

        let topo = topological_indices(&parents, &children);
        Ok(Network {
            variables,
            dag,
            cpts: ordered,
            index,
            parents,
            children,
            topo,
        })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &VariableSpec {
        &self.variables[i]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn dag(&self) -> &DagStructure {
        &self.dag
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, i: usize) -> &Cpt {
        &self.cpts[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Like [`Network::index_of`] but with a typed error.
    pub fn require(&self, name: &str) -> Result<usize, ModelError> {
        self.index_of(name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.variables[i].states.len()
    }

    /// Parent indices of node `i`, in declaration order.
    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Row index of the parent configuration `states` (one state per parent).
    pub fn row_index(&self, i: usize, states: impl IntoIterator<Item = usize>) -> usize {
        let mut row = 0;
        for (&p, s) in self.parents[i].iter().zip(states) {
            row = row * self.cardinality(p) + s;
        }
        row
    }

    /// Probability of node `i` taking `state` given a full assignment that
    /// covers its parents.
    pub fn conditional(&self, i: usize, state: usize, assignment: &[usize]) -> f64 {
        let row = self.row_index(i, self.parents[i].iter().map(|&p| assignment[p]));
        self.cpts[i].rows[row][state]
    }

    /// Node indices in topological order, ties broken by declaration order.
    pub fn topological_indices(&self) -> &[usize] {
        &self.topo
    }

    /// Node names in topological order, ties broken by declaration order.
    pub fn topological_order(&self) -> Vec<String> {
        self.topo
            .iter()
            .map(|&i| self.variables[i].name.clone())
            .collect()
    }

    /// Ancestors of the given nodes, including the nodes themselves, as a
    /// membership mask.
    pub fn ancestral_mask(&self, nodes: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        let mut stack: Vec<usize> = nodes.into_iter().collect();
        while let Some(v) = stack.pop() {
            if !mask[v] {
                mask[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        mask
    }

    /// Returns a copy of the network in which the statistical meaning of the
    /// states of `var` is permuted: new state `s` carries the probability
    /// mass of old state `perm[s]`. Labels stay in place. Used to align the
    /// labels of latent variables after EM.
    pub fn relabel_states(&self, var: usize, perm: &[usize]) -> Result<Network, ModelError> {
        let card = self.cardinality(var);
        let mut check: Vec<usize> = perm.to_vec();
        check.sort_unstable();
        if check != (0..card).collect::<Vec<_>>() {
            return Err(ModelError::ShapeMismatch {
                variable: self.variables[var].name.clone(),
                detail: format!("{perm:?} is not a permutation of 0..{card}"),
            });
        }
        let mut cpts = self.cpts.clone();
        for row in &mut cpts[var].rows {
            let old = row.clone();
            for (s, &o) in perm.iter().enumerate() {
                row[s] = old[o];
            }
        }
        for &child in &self.children[var] {
            let pa = &self.parents[child];
            let pos = pa.iter().position(|&p| p == var).unwrap();
            let inner: usize = pa[pos + 1..].iter().map(|&p| self.cardinality(p)).product();
            let old = cpts[child].rows.clone();
            for (r, row) in cpts[child].rows.iter_mut().enumerate() {
                let s = (r / inner) % card;
                let source = r - s * inner + perm[s] * inner;
                row.clone_from(&old[source]);
            }
        }
        Network::new(self.variables.clone(), self.dag.clone(), cpts)
    }
}

fn check_cpt(cpt: &Cpt, variables: &[VariableSpec], parents: &[usize]) -> Result<(), ModelError> {
    let expected: Vec<&str> = parents.iter().map(|&p| variables[p].name.as_str()).collect();
    let given: Vec<&str> = cpt.parents.iter().map(String::as_str).collect();
    if expected != given {
        let same_set = {
            let mut a = expected.clone();
            let mut b = given.clone();
            a.sort_unstable();
            b.sort_unstable();
            a == b
        };
        let detail = if same_set {
            format!("parents must be listed in declaration order {expected:?}, got {given:?}")
        } else {
            format!("CPT parents {given:?} do not match DAG parents {expected:?}")
        };
        return Err(ModelError::ShapeMismatch {
            variable: cpt.variable.clone(),
            detail,
        });
    }
    let var = variables
        .iter()
        .find(|v| v.name == cpt.variable)
        .expect("cpt variable resolved by caller");
    let configs: usize = parents.iter().map(|&p| variables[p].cardinality()).product();
    if cpt.rows.len() != configs {
        return Err(ModelError::ShapeMismatch {
            variable: cpt.variable.clone(),
            detail: format!("expected {configs} rows, found {}", cpt.rows.len()),
        });
    }
    for (r, row) in cpt.rows.iter().enumerate() {
        if row.len() != var.cardinality() {
            return Err(ModelError::ShapeMismatch {
                variable: cpt.variable.clone(),
                detail: format!(
                    "row {r} has {} entries, variable has {} states",
                    row.len(),
                    var.cardinality()
                ),
            });
        }
        if let Some(&value) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ModelError::InvalidProbability {
                variable: cpt.variable.clone(),
                row: r,
                value,
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(ModelError::RowNotNormalized {
                variable: cpt.variable.clone(),
                row: r,
                sum,
            });
        }
    }
    Ok(())
}

fn topological_indices(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Vec<usize> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = indegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(parents.len());
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    order
}
