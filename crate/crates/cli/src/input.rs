use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use flatsearch::interchange::{read_embeddings, read_labels, read_vectors_csv, InterchangeError, EMB1_MAGIC};
use flatsearch::{EmbeddingSet, LabelTable};

/// File stem, used as the default model tag.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
}

/// Reads an EMB1 file, or a CSV of floats when the EMB1 magic is absent.
pub fn load_vectors(path: &Path) -> Result<EmbeddingSet> {
    let bytes = fs::read(path).map_err(InterchangeError::from).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if bytes.starts_with(&EMB1_MAGIC) { read_embeddings(&bytes[..]) } else { read_vectors_csv(&bytes[..]) };
    let mut set = parsed.with_context(|| format!("parsing {}", path.display()))?;
    set.source_tag = stem(path);
    Ok(set)
}

pub fn load_labels(path: &Path) -> Result<LabelTable> {
    let file = File::open(path).map_err(InterchangeError::from).with_context(|| format!("opening {}", path.display()))?;
    read_labels(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

/// Embeddings and labels, checked for equal row counts.
pub fn load_aligned(embeddings: &Path, labels: &Path) -> Result<(EmbeddingSet, LabelTable)> {
    let set = load_vectors(embeddings)?;
    let table = load_labels(labels)?;
    flatsearch::interchange::validate_alignment(&set, &table)
        .into_result()
        .with_context(|| format!("{} vs {}", embeddings.display(), labels.display()))?;
    Ok((set, table))
}
