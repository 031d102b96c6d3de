//! An index on disk is a plain EMB1 file of its stored rows plus a JSON
//! sidecar `<file>.json` holding `{"metric": "l2"|"ip", "normalized": bool}`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{norm, IndexError, Metric, MetricKind, VectorIndex};
use crate::interchange::{read_embeddings, write_embeddings, EmbeddingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSidecar {
    pub metric: MetricKind,
    pub normalized: bool,
}

impl From<Metric> for IndexSidecar {
    fn from(m: Metric) -> Self {
        Self { metric: m.kind(), normalized: m.normalized() }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), IndexError> {
    let set = EmbeddingSet::new(index.dim, index.vectors.clone(), "")?;
    let file = File::create(path)?;
    write_embeddings(&set, BufWriter::new(file))?;
    let sidecar = IndexSidecar::from(index.metric);
    let json = serde_json::to_string(&sidecar)?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<VectorIndex, IndexError> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    let sidecar: IndexSidecar = serde_json::from_str(&text)?;
    let metric = Metric::new(sidecar.metric, sidecar.normalized)?;
    let file = File::open(path)?;
    let set = read_embeddings(BufReader::new(file))?;
    // Rows saved from a normalized index are already unit length; keep their
    // exact bits rather than renormalizing.
    if metric.normalized() && set.rows().all(|v| (norm(v) - 1.0).abs() <= 1e-6) {
        return Ok(VectorIndex { metric, dim: set.dim(), vectors: set.data().to_vec() });
    }
    VectorIndex::build(&set, metric)
}
