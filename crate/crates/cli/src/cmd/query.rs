use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use flatsearch::index::load_index;
use flatsearch::interchange::InterchangeError;
use flatsearch::metrics::retrieve_row;
use flatsearch::{LabelTable, Metric, RankedResult, SelfMatchPolicy, VectorIndex};
use serde::Serialize;

use crate::input::{load_labels, load_vectors};

#[derive(clap::Args, Debug)]
pub struct QueryArgs {
    /// Index saved by `build`.
    #[arg(long, required_unless_present = "embeddings", conflicts_with = "embeddings")]
    pub index: Option<PathBuf>,
    /// Embeddings to index on the fly instead of `--index`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Metric for `--embeddings`: l2, cosine or ip.
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
    /// Labels CSV; adds a label column.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Corpus row to use as the query.
    #[arg(long, required_unless_present = "vector", conflicts_with = "vector")]
    pub row: Option<usize>,
    /// File with one query vector (float CSV or EMB1).
    #[arg(long)]
    pub vector: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// include or exclude; applies to `--row` queries.
    #[arg(long, default_value = "include")]
    pub self_match: SelfMatchPolicy,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Serialize)]
struct Hit {
    rank: usize,
    id: usize,
    score: f64,
    label: Option<u8>,
}

#[derive(Serialize)]
struct Output {
    query_row: Option<usize>,
    metric: String,
    k: usize,
    self_match: SelfMatchPolicy,
    elapsed_us: f64,
    neighbors: Vec<Hit>,
}

fn open_index(args: &QueryArgs) -> Result<VectorIndex> {
    match (&args.index, &args.embeddings) {
        (Some(path), _) => load_index(path).with_context(|| format!("loading {}", path.display())),
        (None, Some(path)) => Ok(VectorIndex::build(&load_vectors(path)?, args.metric)?),
        (None, None) => bail!("either --index or --embeddings is required"),
    }
}

fn search(args: &QueryArgs, index: &VectorIndex) -> Result<RankedResult> {
    if let Some(row) = args.row {
        return Ok(retrieve_row(index, row, args.k, args.self_match)?);
    }
    let path = args.vector.as_ref().context("either --row or --vector is required")?;
    let query = load_vectors(path)?;
    if query.count() != 1 {
        bail!("{} holds {} vectors; expected exactly one", path.display(), query.count());
    }
    Ok(index.search(query.row(0), args.k)?)
}

pub fn run(args: QueryArgs) -> Result<()> {
    let index = open_index(&args)?;
    let labels: Option<LabelTable> = args.labels.as_deref().map(load_labels).transpose()?;
    if let Some(l) = &labels {
        if l.len() != index.count() {
            return Err(InterchangeError::CountMismatch { embeddings: index.count(), labels: l.len() }.into());
        }
    }

    let result = search(&args, &index)?;
    if result.neighbors.len() < args.k {
        eprintln!(
            "warning: k={} exceeds the {} available neighbors; returning {}",
            args.k,
            result.neighbors.len(),
            result.neighbors.len()
        );
    }

    let label_of = |id: usize| labels.as_ref().and_then(|l| l.label(id)).map(|b| b.get());
    if args.json {
        let out = Output {
            query_row: args.row,
            metric: index.metric().to_string(),
            k: args.k,
            self_match: args.self_match,
            elapsed_us: result.elapsed_micros(),
            neighbors: result
                .neighbors
                .iter()
                .enumerate()
                .map(|(i, n)| Hit { rank: i + 1, id: n.id, score: n.score, label: label_of(n.id) })
                .collect(),
        };
        super::emit(&(serde_json::to_string_pretty(&out)? + "\n"))
    } else {
        let mut text = String::new();
        for n in &result.neighbors {
            let label = label_of(n.id).map_or_else(|| "-".to_string(), |l| l.to_string());
            text.push_str(&format!("{}\t{:.6}\t{}\n", n.id, n.score, label));
        }
        super::emit(&text)
    }
}
