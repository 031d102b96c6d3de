//! Retrieval quality: precision, recall and NDCG at `k`, per query and over
//! sweeps of queries and cutoffs.

mod eval;
mod ranking;
mod report;

use thiserror::Error;

use crate::index::IndexError;

pub use eval::{evaluate_query, retrieve_row, sweep, ClassCounts, SelfMatchPolicy, SweepOptions};
pub use ranking::{
    dcg_at_k, ideal_dcg_at_k, ndcg_at_k, precision_at_k, recall_at_k, relevance_vector, RelevanceVector,
};
pub use report::{EvalReport, KAggregate, QueryMetrics, CSV_HEADER};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no k values given")]
    EmptyKValues,
    #[error("neighbor id {0} has no label")]
    UnknownNeighbor(usize),
    #[error("{}", match .query_row {
        Some(q) => format!("recall undefined for query {q}: no other corpus item shares its label"),
        None => "recall undefined: no relevant items exist".to_string(),
    })]
    UndefinedRecall { query_row: Option<usize> },
    #[error("index has {index} rows but {labels} labels were given")]
    LabelCountMismatch { index: usize, labels: usize },
    #[error("query row {row} out of range for corpus of {count}")]
    QueryOutOfRange { row: usize, count: usize },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
