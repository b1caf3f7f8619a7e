//! Discrete Bayesian networks for profiling cyberbullying risk from
//! serious-game decisions and questionnaire data.
//!
//! The crate covers the model layer (schema, DAG, CPTs), exact inference by
//! variable elimination, parameter learning (Dirichlet smoothing and EM with
//! latent variables), the influence and profiling analyses, and dataset
//! ingestion plus a synthetic survey generator.

pub mod analysis;
pub mod data;
pub mod inference;
pub mod learning;
pub mod model;

#[cfg(test)]
mod test_fixtures;
