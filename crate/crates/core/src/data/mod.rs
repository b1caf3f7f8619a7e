//! Variable schema, dataset ingestion, calibration filters and the
//! synthetic survey generator.

mod dataset;
mod filters;
mod generator;
mod schema;
mod summary;

pub use dataset::*;
pub use filters::*;
pub use generator::*;
pub use schema::*;
pub use summary::*;
