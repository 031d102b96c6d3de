use std::path::PathBuf;

use anyhow::{Context, Result};
use flatsearch::interchange::{write_embeddings, write_labels};

use crate::input::load_aligned;

#[derive(clap::Args, Debug)]
pub struct IngestArgs {
    /// Float CSV (one vector per line, optional header) or EMB1 file.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Labels CSV with header `row,image_id,label`.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output EMB1 file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output labels CSV.
    #[arg(long)]
    pub labels_out: PathBuf,
}

pub fn run(args: IngestArgs) -> Result<()> {
    let (set, labels) = load_aligned(&args.embeddings, &args.labels)?;
    write_embeddings(&set, super::create(&args.out)?).with_context(|| format!("writing {}", args.out.display()))?;
    write_labels(&labels, super::create(&args.labels_out)?)
        .with_context(|| format!("writing {}", args.labels_out.display()))?;
    println!("count={} dim={} -> {}, {}", set.count(), set.dim(), args.out.display(), args.labels_out.display());
    Ok(())
}
