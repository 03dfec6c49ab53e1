//! Formulation record store and weighted nearest-neighbour retrieval.
//!
//! Similarity between a query and a stored record is
//! `exp(-Σ_j w_j |q_j - r_j| / s_j)` over the eight numeric features, where
//! `s_j` is a robust spread of feature `j` across the store and `w_j` comes
//! from [`adapt_weights`].

mod store;
mod weights;

use std::path::Path;

use thiserror::Error;

pub use store::{distance, score, IngestOutcome, RecordStore, Retrieved};
pub use weights::{
    adapt_weights, robust_scale, spearman, RetrievalWeights, MIN_RECORDS_FOR_ADAPTATION, SCALE_FLOOR,
};

use crate::record::{FormulationRecord, RecordError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("record id `{0}` already exists (use overwrite to replace it)")]
    Conflict(String),
    #[error("invalid record: {0}")]
    Validation(#[from] RecordError),
    #[error("the store is empty")]
    EmptyStore,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no records to render as examples")]
    NoRecords,
    #[error("store line {line} is not a valid record: {message}")]
    Corrupt { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Renders records as prompt example blocks, in the given order.
pub fn to_examples(records: &[FormulationRecord]) -> Result<String, StoreError> {
    if records.is_empty() {
        return Err(StoreError::NoRecords);
    }
    Ok(crate::prompt::render_examples(records))
}
