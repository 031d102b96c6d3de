//! Embedding-space analysis: PCA, exact t-SNE and scatter-plot output.

mod pca;
mod scatter;
mod tsne;

use thiserror::Error;

pub use pca::{fit_pca, transform_pca, PcaModel};
pub use scatter::{emit_scatter, write_kl_trace, write_scatter_files, SCATTER_CSV_HEADER};
pub use tsne::{
    joint_probabilities, kl_divergence, kl_gradient, perplexity_calibration, student_t_affinities, tsne,
    Calibration, TsneConfig, TsneInit, FLOOR,
};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("requested {requested} components but at most {max} are available")]
    TooManyComponents { requested: usize, max: usize },
    #[error("zero total variance: all rows are identical")]
    ZeroVariance,
    #[error("dimension mismatch: model has {expected}, data has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("perplexity {perplexity} infeasible for {n} samples (must be > 1 and < (n-1)/3)")]
    InfeasiblePerplexity { perplexity: f64, n: usize },
    #[error("all distances are zero; bandwidth is undefined")]
    DegenerateDistances,
    #[error("non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("{coords} points but {labels} labels")]
    Misaligned { coords: usize, labels: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Two-dimensional coordinates for each input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    pub coords: Vec<[f64; 2]>,
    pub labels: Option<Vec<u8>>,
    /// KL divergence of the unexaggerated objective before each update
    /// (t-SNE only).
    pub kl_trace: Vec<f64>,
    /// Times a low-dimensional affinity was floored while evaluating KL.
    pub floor_events: u64,
}

impl Projection2D {
    pub fn from_coords(coords: Vec<[f64; 2]>) -> Self {
        Self { coords, labels: None, kl_trace: Vec::new(), floor_events: 0 }
    }

    /// First two columns of a `n x c` matrix (`c >= 2`).
    pub fn from_matrix(m: &nalgebra::DMatrix<f64>) -> Self {
        Self::from_coords((0..m.nrows()).map(|i| [m[(i, 0)], m[(i, 1)]]).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}
