pub mod build;
pub mod evaluate;
pub mod ingest;
pub mod project;
pub mod query;
pub mod report;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use flatsearch::metrics::KAggregate;

pub const TABLE_HEADER: &str = "     k  precision     recall       ndcg  search_time_s";

pub fn table_row(a: &KAggregate) -> String {
    format!(
        "{:>6}  {:>9.6}  {:>9.6}  {:>9.6}  {:>13.6}",
        a.k,
        a.mean_precision,
        a.mean_recall,
        a.mean_ndcg,
        a.mean_elapsed_us / 1e6
    )
}

/// Creates `path` for writing, making parent directories as needed.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Writes `text` to stdout; a reader that hung up early (`| head`) is not an
/// error.
pub fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}
