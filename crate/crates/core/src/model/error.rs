use thiserror::Error;

/// Errors raised while declaring, validating or parsing a network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{variable}` declares state `{state}` twice")]
    DuplicateState { variable: String, state: String },
    #[error("variable `{0}` needs at least two states")]
    TooFewStates(String),
    #[error("meta variable `{0}` cannot be part of a network")]
    MetaVariable(String),
    #[error("edge references undeclared node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {parent} -> {child}")]
    DuplicateEdge { parent: String, child: String },
    #[error("cycle detected: {}", .cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("no CPT for variable `{0}`")]
    MissingCpt(String),
    #[error("more than one CPT for variable `{0}`")]
    DuplicateCpt(String),
    #[error("CPT given for unknown variable `{0}`")]
    UnknownCptVariable(String),
    #[error("shape mismatch in `{variable}`: {detail}")]
    ShapeMismatch { variable: String, detail: String },
    #[error("`{variable}` row {row}: probability {value} outside [0, 1]")]
    InvalidProbability {
        variable: String,
        row: usize,
        value: f64,
    },
    #[error("`{variable}` row {row} sums to {sum}, not 1")]
    RowNotNormalized {
        variable: String,
        row: usize,
        sum: f64,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{state}` is not a state of `{variable}`")]
    UnknownState { variable: String, state: String },
    #[error("variable `{0}` appears more than once in evidence")]
    DuplicateEvidence(String),
}
