//! Driving paths and exact-in-law Lévy samplers.

mod sampler;
pub mod stable;
mod stepped;

use thiserror::Error;

pub use sampler::{sample_stepped_splp, sample_subordinator_grid, LazyLevySampler};
pub use stepped::{PathEnvelope, SteppedPath};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("query time {requested} precedes the last query time {last}")]
    NonMonotoneQuery { last: f64, requested: f64 },
    #[error("mechanism is outside the family representable by this sampler")]
    UnsupportedFamily,
    #[error("invalid path data: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(String),
}
