//! Immutable flat indices with exact top-k search.
//!
//! Every query is scored against every stored row. L2 results are ordered by
//! ascending distance, inner-product results by descending score, and equal
//! scores always resolve to the smaller row id.

mod distance;
mod persist;
mod topk;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interchange::{EmbeddingSet, InterchangeError};

pub use distance::{inner_product, l2_distance, norm, normalize, squared_l2_distance, MIN_NORM};
pub use persist::{load_index, save_index, sidecar_path, IndexSidecar};

use distance::{dot_unchecked, squared_l2_unchecked};
use topk::{Candidate, TopK};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("dimension mismatch: index has {expected}, query has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("{}", match .row { Some(r) => format!("row {r} has (near-)zero norm and cannot be normalized"), None => "vector has (near-)zero norm and cannot be normalized".to_string() })]
    DegenerateVector { row: Option<usize> },
    #[error("row {row} out of range for index of {count} rows")]
    RowOutOfRange { row: usize, count: usize },
    #[error("L2 metric cannot be normalized")]
    InvalidMetric,
    #[error("unknown metric {0:?} (expected l2, cosine or ip)")]
    UnknownMetric(String),
    #[error("sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
    #[error(transparent)]
    Interchange(#[from] InterchangeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    L2,
    #[serde(rename = "ip")]
    InnerProduct,
}

/// Scoring rule of an index. `normalized` inner product is cosine similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Metric {
    kind: MetricKind,
    normalized: bool,
}

impl Metric {
    pub const L2: Metric = Metric { kind: MetricKind::L2, normalized: false };
    pub const INNER_PRODUCT: Metric = Metric { kind: MetricKind::InnerProduct, normalized: false };
    pub const COSINE: Metric = Metric { kind: MetricKind::InnerProduct, normalized: true };

    pub fn new(kind: MetricKind, normalized: bool) -> Result<Self, IndexError> {
        if kind == MetricKind::L2 && normalized {
            return Err(IndexError::InvalidMetric);
        }
        Ok(Self { kind, normalized })
    }

    pub fn kind(self) -> MetricKind {
        self.kind
    }

    pub fn normalized(self) -> bool {
        self.normalized
    }

    /// True when larger scores rank first.
    pub fn higher_is_better(self) -> bool {
        self.kind == MetricKind::InnerProduct
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.kind, self.normalized) {
            (MetricKind::L2, _) => "l2",
            (MetricKind::InnerProduct, true) => "cosine",
            (MetricKind::InnerProduct, false) => "ip",
        })
    }
}

impl FromStr for Metric {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "cosine" => Ok(Metric::COSINE),
            "ip" => Ok(Metric::INNER_PRODUCT),
            _ => Err(IndexError::UnknownMetric(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    /// Distance for L2, similarity for inner product.
    pub score: f64,
}

/// Neighbors of one query, best first, with the time spent scoring and
/// selecting them.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub query_row: Option<usize>,
    pub neighbors: Vec<Neighbor>,
    pub elapsed: Duration,
}

impl RankedResult {
    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.neighbors.iter().map(|n| n.id)
    }

    pub fn elapsed_micros(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e6
    }
}

/// Brute-force index over a copy of an [`EmbeddingSet`].
#[derive(Debug, Clone)]
pub struct VectorIndex {
    metric: Metric,
    dim: usize,
    vectors: Vec<f32>,
}

impl VectorIndex {
    /// Builds an index. Under a normalized metric every row is scaled to
    /// unit norm; a zero row is an error naming that row.
    pub fn build(set: &EmbeddingSet, metric: Metric) -> Result<Self, IndexError> {
        let vectors = if metric.normalized {
            let mut out = Vec::with_capacity(set.data().len());
            for (row, v) in set.rows().enumerate() {
                let unit = normalize(v).map_err(|_| IndexError::DegenerateVector { row: Some(row) })?;
                out.extend_from_slice(&unit);
            }
            out
        } else {
            set.data().to_vec()
        };
        Ok(Self { metric, dim: set.dim(), vectors })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.vectors.len() / self.dim
    }

    /// Stored (possibly normalized) row.
    pub fn vector(&self, id: usize) -> &[f32] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.vectors.chunks_exact(self.dim)
    }

    /// Exact top-`k` for an external query. `k` larger than the index yields
    /// every row.
    pub fn search(&self, query: &[f32], k: usize) -> Result<RankedResult, IndexError> {
        self.check_query(query, k)?;
        if self.metric.normalized {
            let unit = normalize(query)?;
            Ok(self.scan(&unit, k, None))
        } else {
            Ok(self.scan(query, k, None))
        }
    }

    /// Searches with stored row `row` as the query.
    pub fn search_row(&self, row: usize, k: usize) -> Result<RankedResult, IndexError> {
        if row >= self.count() {
            return Err(IndexError::RowOutOfRange { row, count: self.count() });
        }
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        Ok(self.scan(self.vector(row), k, Some(row)))
    }

    /// Runs independent searches in parallel; output order matches `queries`.
    pub fn batch_search<Q>(&self, queries: &[Q], k: usize) -> Result<Vec<RankedResult>, IndexError>
    where
        Q: AsRef<[f32]> + Sync,
    {
        queries.par_iter().map(|q| self.search(q.as_ref(), k)).collect()
    }

    fn check_query(&self, query: &[f32], k: usize) -> Result<(), IndexError> {
        if query.len() != self.dim {
            return Err(IndexError::DimensionMismatch { expected: self.dim, actual: query.len() });
        }
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        Ok(())
    }

    fn scan(&self, query: &[f32], k: usize, query_row: Option<usize>) -> RankedResult {
        let start = Instant::now();
        let mut top = TopK::new(k.min(self.count()));
        match self.metric.kind {
            MetricKind::L2 => {
                for (id, v) in self.vectors().enumerate() {
                    top.push(Candidate { key: squared_l2_unchecked(query, v), id });
                }
            }
            MetricKind::InnerProduct => {
                for (id, v) in self.vectors().enumerate() {
                    top.push(Candidate { key: -dot_unchecked(query, v), id });
                }
            }
        }
        let selected = top.into_sorted();
        let elapsed = start.elapsed();

        let neighbors = selected
            .into_iter()
            .map(|c| Neighbor {
                id: c.id,
                score: match self.metric.kind {
                    MetricKind::L2 => c.key.sqrt(),
                    MetricKind::InnerProduct => -c.key,
                },
            })
            .collect();
        RankedResult { query_row, neighbors, elapsed }
    }
}
