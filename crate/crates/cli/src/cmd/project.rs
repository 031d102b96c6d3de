use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use flatsearch::interchange::validate_alignment;
use flatsearch::projection::{fit_pca, transform_pca, tsne, write_kl_trace, write_scatter_files, Projection2D, TsneConfig, TsneInit};

use super::create;
use crate::config::ConfigArgs;
use crate::input::{load_labels, load_vectors};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Pca,
    Tsne,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Init {
    Pca,
    Random,
}

#[derive(clap::Args, Debug)]
pub struct ProjectArgs {
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Pca)]
    pub method: Method,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output file stem (default: `<model>_<method>`).
    #[arg(long)]
    pub stem: Option<String>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 200.0)]
    pub learning_rate: f64,
    /// Reduce wider inputs to this many PCA dimensions before t-SNE; 0 keeps
    /// the full width.
    #[arg(long, default_value_t = 50)]
    pub pca_dims: usize,
    #[arg(long, value_enum, default_value_t = Init::Pca)]
    pub init: Init,
}

pub fn run(args: ProjectArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let Some(path) = args.embeddings.clone().or(cfg.embeddings_path.clone()) else {
        bail!("no embeddings given (use --embeddings or embeddings_path in the config)");
    };
    let set = load_vectors(&path)?;
    let labels: Option<Vec<u8>> = match &cfg.labels_path {
        Some(p) => {
            let table = load_labels(p)?;
            validate_alignment(&set, &table).into_result()?;
            Some(table.labels().map(|b| b.get()).collect())
        }
        None => None,
    };
    let data = set.to_matrix();
    let method = match args.method {
        Method::Pca => "pca",
        Method::Tsne => "tsne",
    };
    let stem = args.stem.clone().unwrap_or_else(|| format!("{}_{method}", set.source_tag));
    let title = args.title.clone().unwrap_or_else(|| format!("{} ({method})", set.source_tag));

    let proj = match args.method {
        Method::Pca => {
            let model = fit_pca(&data, 2)?;
            let ratios = &model.explained_variance_ratio;
            println!("explained variance ratio: {:.6} {:.6}", ratios[0], ratios[1]);
            println!("cumulative (2 components): {:.6}", model.cumulative_ratio(2));
            Projection2D::from_matrix(&transform_pca(&model, &data)?)
        }
        Method::Tsne => {
            let tc = TsneConfig {
                perplexity: args.perplexity,
                n_iter: args.iterations,
                learning_rate: args.learning_rate,
                pca_dims: (args.pca_dims > 0).then_some(args.pca_dims),
                init: match args.init {
                    Init::Pca => TsneInit::Pca,
                    Init::Random => TsneInit::Random,
                },
                seed: cfg.seed,
                ..TsneConfig::default()
            };
            let proj = tsne(&data, &tc)?;
            let trace_path = cfg.output_dir.join(format!("{stem}_kl.csv"));
            write_kl_trace(&proj, create(&trace_path)?)?;
            if let Some(kl) = proj.kl_trace.last() {
                println!("final KL {kl:.6} after {} iterations ({} floored affinities)", proj.kl_trace.len(), proj.floor_events);
            }
            println!("wrote {}", trace_path.display());
            proj
        }
    };

    std::fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let (svg, csv) = write_scatter_files(&proj, labels.as_deref(), &title, &cfg.output_dir, &stem)?;
    println!("wrote {} and {}", svg.display(), csv.display());
    Ok(())
}
