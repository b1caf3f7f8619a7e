//! JSON model files.
//!
//! ```json
//! {
//!   "variables": [{"name": "A", "states": ["0", "1"], "kind": "demographic"}],
//!   "edges": [["A", "B"]],
//!   "cpts": {"A": {"parents": [], "rows": [[0.7, 0.3]]}}
//! }
//! ```
//!
//! `rows` is normally an array of arrays in canonical configuration order. It
//! may also be an object keyed by a row header such as `"A=1,C=0"` (root
//! variables use `""`), which is convenient when writing files by hand.
//! Numbers are written in shortest round-trip form, so serializing and
//! re-parsing reproduces every probability bit for bit.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::Deserialize;

use super::{Cpt, DagStructure, ModelError, Network, VariableSpec};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    variables: Vec<VariableSpec>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    cpts: Option<IndexMap<String, CptFile>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CptFile {
    #[serde(default)]
    parents: Vec<String>,
    rows: Rows,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Rows {
    Table(Vec<Vec<f64>>),
    Labeled(IndexMap<String, Vec<f64>>),
}

fn read(text: &str) -> Result<ModelFile, ModelError> {
    serde_json::from_str(text).map_err(|e| ModelError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn structure(file: &ModelFile) -> Result<(Vec<VariableSpec>, DagStructure), ModelError> {
    super::validate_schema(&file.variables)?;
    let nodes = file.variables.iter().map(|v| v.name.clone()).collect();
    let dag = DagStructure::new(nodes, file.edges.clone())?;
    Ok((file.variables.clone(), dag))
}

/// Parses variables and edges only; any `cpts` section is ignored.
pub fn parse_structure(text: &str) -> Result<(Vec<VariableSpec>, DagStructure), ModelError> {
    structure(&read(text)?)
}

/// Parses and validates a full model file.
pub fn parse_model(text: &str) -> Result<Network, ModelError> {
    let file = read(text)?;
    let (variables, dag) = structure(&file)?;
    let Some(cpt_files) = &file.cpts else {
        let first = variables.first().map(|v| v.name.clone()).unwrap_or_default();
        return Err(ModelError::MissingCpt(first));
    };
    let mut cpts = Vec::with_capacity(cpt_files.len());
    for (name, cf) in cpt_files {
        let rows = match &cf.rows {
            Rows::Table(rows) => rows.clone(),
            Rows::Labeled(map) => labeled_rows(text, name, &cf.parents, map, &variables)?,
        };
        cpts.push(Cpt {
            variable: name.clone(),
            parents: cf.parents.clone(),
            rows,
        });
    }
    Network::new(variables, dag, cpts)
}

fn labeled_rows(
    text: &str,
    variable: &str,
    parents: &[String],
    map: &IndexMap<String, Vec<f64>>,
    variables: &[VariableSpec],
) -> Result<Vec<Vec<f64>>, ModelError> {
    let specs: Vec<&VariableSpec> = parents
        .iter()
        .map(|p| {
            variables
                .iter()
                .find(|v| &v.name == p)
                .ok_or_else(|| ModelError::UnknownVariable(p.clone()))
        })
        .collect::<Result<_, _>>()?;
    let configs: usize = specs.iter().map(|s| s.cardinality()).product();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; configs];
    for (header, row) in map {
        let syntax = |message: String| {
            let (line, column) = locate(text, variable, header);
            ModelError::Syntax {
                line,
                column,
                message,
            }
        };
        let mut states = vec![None; specs.len()];
        for pair in header.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (p, s) = pair
                .split_once('=')
                .ok_or_else(|| syntax(format!("row header `{header}`: expected `Parent=state`")))?;
            let pos = parents
                .iter()
                .position(|x| x == p.trim())
                .ok_or_else(|| syntax(format!("row header `{header}`: `{p}` is not a parent of `{variable}`")))?;
            let state = specs[pos].state_index(s.trim()).ok_or_else(|| {
                syntax(format!(
                    "row header `{header}`: unknown state `{}` for `{}`",
                    s.trim(),
                    specs[pos].name
                ))
            })?;
            if states[pos].replace(state).is_some() {
                return Err(syntax(format!("row header `{header}` repeats `{p}`")));
            }
        }
        let mut index = 0;
        for (spec, state) in specs.iter().zip(&states) {
            let state = state.ok_or_else(|| {
                syntax(format!("row header `{header}` does not assign `{}`", spec.name))
            })?;
            index = index * spec.cardinality() + state;
        }
        if rows[index].replace(row.clone()).is_some() {
            return Err(syntax(format!("configuration `{header}` given twice")));
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| ModelError::ShapeMismatch {
                variable: variable.to_string(),
                detail: format!("no row for parent configuration {i}"),
            })
        })
        .collect()
}

// Best-effort position of a row header inside the `cpts` block of `variable`.
fn locate(text: &str, variable: &str, header: &str) -> (usize, usize) {
    let quoted = |s: &str| serde_json::to_string(s).unwrap_or_default();
    let cpts = text.find("\"cpts\"").unwrap_or(0);
    let var = text[cpts..]
        .find(&quoted(variable))
        .map_or(cpts, |i| cpts + i);
    let offset = text[var..]
        .find(&quoted(header))
        .map_or(var, |i| var + i);
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

/// Serializes a network in the canonical model format.
pub fn serialize_model(network: &Network) -> String {
    let mut out = String::from("{\n  \"variables\": [");
    for (i, v) in network.variables().iter().enumerate() {
        let sep = if i + 1 < network.len() { "," } else { "" };
        let _ = write!(
            out,
            "\n    {{\"name\": {}, \"states\": {}, \"kind\": {}}}{sep}",
            json(&v.name),
            json(&v.states),
            json(&v.kind)
        );
    }
    out.push_str("\n  ],\n  \"edges\": [");
    let edges = network.dag().edges();
    for (i, (p, c)) in edges.iter().enumerate() {
        let sep = if i + 1 < edges.len() { "," } else { "" };
        let _ = write!(out, "\n    [{}, {}]{sep}", json(p), json(c));
    }
    out.push_str(if edges.is_empty() { "],\n" } else { "\n  ],\n" });
    out.push_str("  \"cpts\": {");
    for (i, cpt) in network.cpts().iter().enumerate() {
        let _ = write!(
            out,
            "\n    {}: {{\"parents\": {}, \"rows\": [",
            json(&cpt.variable),
            json(&cpt.parents)
        );
        for (r, row) in cpt.rows.iter().enumerate() {
            let sep = if r + 1 < cpt.rows.len() { "," } else { "" };
            let _ = write!(out, "\n      {}{sep}", json(row));
        }
        let sep = if i + 1 < network.len() { "," } else { "" };
        let _ = write!(out, "\n    ]}}{sep}");
    }
    out.push_str("\n  }\n}\n");
    out
}
