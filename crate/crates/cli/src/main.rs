//! `flatsearch` command-line driver: ingest, build, query, evaluate,
//! project, report.

mod cmd;
mod config;
mod exit;
mod input;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "flatsearch", version, about = "Exact embedding retrieval, evaluation and projection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a float CSV or EMB1 file plus a labels CSV into EMB1 + labels.
    Ingest(cmd::ingest::IngestArgs),
    /// Build a flat index and save it with its metric sidecar.
    Build(cmd::build::BuildArgs),
    /// Print the nearest neighbors of a corpus row or an external vector.
    Query(cmd::query::QueryArgs),
    /// Run a retrieval sweep and write per-query reports.
    Evaluate(cmd::evaluate::EvaluateArgs),
    /// Project embeddings to 2-D with PCA or t-SNE.
    Project(cmd::project::ProjectArgs),
    /// Compare evaluation reports from several models.
    Report(cmd::report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::GENERIC } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => cmd::ingest::run(args),
        Command::Build(args) => cmd::build::run(args),
        Command::Query(args) => cmd::query::run(args),
        Command::Evaluate(args) => cmd::evaluate::run(args),
        Command::Project(args) => cmd::project::run(args),
        Command::Report(args) => cmd::report::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit::code_for(&err))
        }
    }
}
