use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flatsearch::interchange::validate_alignment;
use flatsearch::metrics::{sweep, SweepOptions};
use flatsearch::{EvalReport, LabelTable, VectorIndex};

use super::{create, table_row, TABLE_HEADER};
use crate::config::{ConfigArgs, RunConfig};
use crate::input::{load_labels, load_vectors, stem};

#[derive(clap::Args, Debug)]
pub struct EvaluateArgs {
    /// Embedding file per model; repeat to compare models.
    #[arg(long)]
    pub embeddings: Vec<PathBuf>,
    /// Tag per `--embeddings`, in order (default: the file stem).
    #[arg(long = "model-tag")]
    pub model_tags: Vec<String>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Report queries whose class has no other member instead of failing.
    #[arg(long)]
    pub allow_vacuous: bool,
}

fn models(args: &EvaluateArgs, cfg: &RunConfig) -> Result<Vec<(PathBuf, String)>> {
    let paths: Vec<PathBuf> = if args.embeddings.is_empty() {
        cfg.embeddings_path.iter().cloned().collect()
    } else {
        args.embeddings.clone()
    };
    if paths.is_empty() {
        bail!("no embeddings given (use --embeddings or embeddings_path in the config)");
    }
    let tags: Vec<String> = if args.model_tags.is_empty() {
        paths.iter().map(|p| stem(p)).collect()
    } else if args.model_tags.len() == paths.len() {
        args.model_tags.clone()
    } else {
        bail!("{} --model-tag values for {} --embeddings files", args.model_tags.len(), paths.len());
    };
    let mut seen = HashSet::new();
    if let Some(dup) = tags.iter().find(|t| !seen.insert(t.as_str())) {
        bail!("model tag {dup:?} used twice; pass --model-tag to disambiguate");
    }
    Ok(paths.into_iter().zip(tags).collect())
}

fn evaluate_one(path: &Path, tag: &str, labels: &LabelTable, cfg: &RunConfig, allow_vacuous: bool) -> Result<EvalReport> {
    let set = load_vectors(path)?;
    validate_alignment(&set, labels).into_result().with_context(|| format!("model {tag}"))?;
    let index = VectorIndex::build(&set, cfg.metric).with_context(|| format!("indexing {}", path.display()))?;
    let queries = cfg.query_rows.rows(set.count());
    let options = SweepOptions { policy: cfg.self_match, allow_vacuous };
    let report = sweep(&index, labels, &queries, &cfg.k_values, options).with_context(|| format!("model {tag}"))?;
    Ok(report.with_model_tag(tag))
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let models = models(&args, &cfg)?;
    let labels = load_labels(cfg.labels()?)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;

    for (path, tag) in &models {
        let report = pool.install(|| evaluate_one(path, tag, &labels, &cfg, args.allow_vacuous))?;
        let json_path = cfg.output_dir.join(format!("{tag}.json"));
        let csv_path = cfg.output_dir.join(format!("{tag}.csv"));
        report.write_json(create(&json_path)?).with_context(|| format!("writing {}", json_path.display()))?;
        report.write_csv(create(&csv_path)?).with_context(|| format!("writing {}", csv_path.display()))?;

        let queries = report.per_query.len() / report.k_values.len();
        println!("model {tag}: metric {}, self-match {}, {queries} queries", cfg.metric, cfg.self_match);
        println!("{TABLE_HEADER}");
        for agg in &report.aggregates {
            println!("{}", table_row(agg));
        }
        let vacuous = report.vacuous_count();
        if vacuous > 0 {
            eprintln!("warning: {vacuous} rows are vacuous (no other item shares the query label)");
        }
        println!("wrote {} and {}", json_path.display(), csv_path.display());
    }
    Ok(())
}
