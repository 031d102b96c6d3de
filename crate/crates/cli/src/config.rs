//! Run configuration: a JSON file via `--config`, with every field
//! overridable by flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use flatsearch::{Metric, SelfMatchPolicy};
use serde::{Deserialize, Serialize};

pub const DEFAULT_K_VALUES: [usize; 6] = [1, 5, 10, 20, 50, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub embeddings_path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
    #[serde(with = "text")]
    pub metric: Metric,
    pub k_values: Vec<usize>,
    pub query_rows: QuerySelection,
    pub self_match: SelfMatchPolicy,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            embeddings_path: None,
            labels_path: None,
            metric: Metric::L2,
            k_values: DEFAULT_K_VALUES.to_vec(),
            query_rows: QuerySelection::All,
            self_match: SelfMatchPolicy::Include,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            bail!("k_values must not be empty");
        }
        if self.k_values[0] == 0 {
            bail!("k_values must be positive");
        }
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            bail!("k_values must be strictly ascending, got {:?}", self.k_values);
        }
        Ok(())
    }

    pub fn labels(&self) -> Result<&Path> {
        self.labels_path.as_deref().context("no labels given (use --labels or labels_path in the config)")
    }
}

/// Flags shared by commands that take a run configuration.
#[derive(clap::Args, Debug, Default)]
pub struct ConfigArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// l2, cosine or ip.
    #[arg(long)]
    pub metric: Option<Metric>,
    /// Comma-separated cutoffs, strictly ascending.
    #[arg(long = "k", value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
    /// `all` or comma-separated corpus rows.
    #[arg(long)]
    pub queries: Option<QuerySelection>,
    /// include or exclude.
    #[arg(long)]
    pub self_match: Option<SelfMatchPolicy>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    /// The config file (or defaults) with flag overrides applied, validated.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.labels {
            cfg.labels_path = Some(v.clone());
        }
        if let Some(v) = self.metric {
            cfg.metric = v;
        }
        if let Some(v) = &self.k_values {
            cfg.k_values = v.clone();
        }
        if let Some(v) = &self.queries {
            cfg.query_rows = v.clone();
        }
        if let Some(v) = self.self_match {
            cfg.self_match = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "QueryRepr", into = "QueryRepr")]
pub enum QuerySelection {
    #[default]
    All,
    Rows(Vec<usize>),
}

impl QuerySelection {
    pub fn rows(&self, count: usize) -> Vec<usize> {
        match self {
            QuerySelection::All => (0..count).collect(),
            QuerySelection::Rows(rows) => rows.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QueryRepr {
    Keyword(String),
    Rows(Vec<usize>),
}

impl TryFrom<QueryRepr> for QuerySelection {
    type Error = String;

    fn try_from(r: QueryRepr) -> Result<Self, String> {
        match r {
            QueryRepr::Keyword(s) if s == "all" => Ok(QuerySelection::All),
            QueryRepr::Keyword(s) => Err(format!("query_rows must be \"all\" or a list of rows, got {s:?}")),
            QueryRepr::Rows(rows) => Ok(QuerySelection::Rows(rows)),
        }
    }
}

impl From<QuerySelection> for QueryRepr {
    fn from(q: QuerySelection) -> Self {
        match q {
            QuerySelection::All => QueryRepr::Keyword("all".into()),
            QuerySelection::Rows(rows) => QueryRepr::Rows(rows),
        }
    }
}

impl FromStr for QuerySelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "all" {
            return Ok(QuerySelection::All);
        }
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad query row {p:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(QuerySelection::Rows)
    }
}

impl fmt::Display for QuerySelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuerySelection::All => f.write_str("all"),
            QuerySelection::Rows(rows) => {
                let parts: Vec<String> = rows.iter().map(usize::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

/// Serde through `Display` / `FromStr`.
mod text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}
