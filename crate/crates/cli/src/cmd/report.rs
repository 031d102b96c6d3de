use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use flatsearch::metrics::MetricsError;
use flatsearch::EvalReport;

use super::{create, table_row, TABLE_HEADER};

pub const COMPARISON_CSV_HEADER: &str = "model_tag,k,precision,recall,ndcg,search_time_s";

#[derive(clap::Args, Debug)]
pub struct ReportArgs {
    /// Report JSON files written by `evaluate`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Write the comparison as CSV (mean metrics per model and k).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &args.reports {
        let file = File::open(path).map_err(MetricsError::from).with_context(|| format!("opening {}", path.display()))?;
        reports.push(EvalReport::read_json(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?);
    }
    let width = reports.iter().map(|r| r.model_tag.len()).max().unwrap_or(0).max(5);

    let mut ks: Vec<usize> = reports.iter().flat_map(|r| r.aggregates.iter().map(|a| a.k)).collect();
    ks.sort_unstable();
    ks.dedup();

    println!("{:<width$}{TABLE_HEADER}", "model");
    let mut csv = args.out.as_deref().map(create).transpose()?;
    if let Some(w) = csv.as_mut() {
        writeln!(w, "{COMPARISON_CSV_HEADER}")?;
    }
    for k in ks {
        for r in &reports {
            let Some(a) = r.at_k(k) else { continue };
            println!("{:<width$}{}", r.model_tag, table_row(a));
            if let Some(w) = csv.as_mut() {
                writeln!(
                    w,
                    "{},{},{:.6},{:.6},{:.6},{:.6}",
                    r.model_tag,
                    k,
                    a.mean_precision,
                    a.mean_recall,
                    a.mean_ndcg,
                    a.mean_elapsed_us / 1e6
                )?;
            }
        }
    }
    if let Some(mut w) = csv {
        w.flush()?;
    }
    Ok(())
}
