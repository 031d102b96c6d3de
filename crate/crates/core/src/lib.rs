//! Exact flat-index retrieval over labeled embedding sets.
//!
//! - [`interchange`]: EMB1 embedding files and labels CSV.
//! - [`index`]: brute-force L2 / inner-product / cosine indices with timed
//!   top-k search.
//! - [`metrics`]: precision, recall and NDCG at `k`, sweeps and reports.
//! - [`projection`]: PCA and exact t-SNE with SVG/CSV scatter output.

pub mod index;
pub mod interchange;
pub mod metrics;
pub mod projection;

pub use index::{Metric, MetricKind, Neighbor, RankedResult, VectorIndex};
pub use interchange::{Birads, EmbeddingSet, LabelTable};
pub use metrics::{EvalReport, QueryMetrics, SelfMatchPolicy};
