use std::path::PathBuf;

use anyhow::{Context, Result};
use flatsearch::index::{save_index, sidecar_path};
use flatsearch::{Metric, VectorIndex};

use crate::input::load_vectors;

#[derive(clap::Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// l2, cosine or ip.
    #[arg(long, default_value = "l2")]
    pub metric: Metric,
    /// Output index file; the metric sidecar goes next to it as `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: BuildArgs) -> Result<()> {
    let set = load_vectors(&args.embeddings)?;
    let index = VectorIndex::build(&set, args.metric)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    save_index(&index, &args.out).with_context(|| format!("saving {}", args.out.display()))?;
    println!(
        "count={} dim={} metric={} -> {} (+ {})",
        index.count(),
        index.dim(),
        index.metric(),
        args.out.display(),
        sidecar_path(&args.out).display()
    );
    Ok(())
}
