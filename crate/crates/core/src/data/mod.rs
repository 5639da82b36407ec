//! Interaction datasets with country metadata.

mod country;
mod dataset;
mod filter;
mod io;
mod matrix;
mod split;
pub mod synthetic;

pub use country::{CountryLabel, InvalidCountry};
pub use dataset::{
    DatasetBuilder, Interaction, InteractionDataset, Provenance, TrackIdx, TrackMeta, UserIdx,
    UserMeta,
};
pub use filter::{apply_filters, k_core, min_track_interactions, FilterOptions};
pub use io::{ingest, parse_interactions, write_interactions, INTERACTIONS_HEADER};
pub use matrix::UserItemMatrix;
pub use split::{random_split, DatasetSplit, SplitRatios};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset is empty after filtering")]
    EmptyAfterFiltering,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("infeasible generator configuration: {0}")]
    Infeasible(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unknown {kind} id {id:?}")]
    UnknownId { kind: &'static str, id: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DataError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}
