use std::io::{Read, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::eval::SelfMatchPolicy;
use super::MetricsError;

pub const CSV_HEADER: &str = "query,k,precision,recall,ndcg,search_time_s";

mod micros {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e6)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let us = f64::deserialize(d)?;
        Duration::try_from_secs_f64(us / 1e6).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    #[serde(rename = "query")]
    pub query_row: usize,
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub ndcg: f64,
    #[serde(rename = "elapsed_us", with = "micros")]
    pub elapsed: Duration,
    /// The query's class had no other member; recall is reported as 0 and
    /// NDCG as 1.
    pub vacuous: bool,
}

/// Mean, min and max of each metric over the queries evaluated at one `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KAggregate {
    pub k: usize,
    pub queries: usize,
    pub mean_precision: f64,
    pub min_precision: f64,
    pub max_precision: f64,
    pub mean_recall: f64,
    pub min_recall: f64,
    pub max_recall: f64,
    pub mean_ndcg: f64,
    pub min_ndcg: f64,
    pub max_ndcg: f64,
    pub mean_elapsed_us: f64,
}

struct Stat {
    sum: f64,
    min: f64,
    max: f64,
}

impl Stat {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(Stat { sum: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }, |s, v| Stat {
            sum: s.sum + v,
            min: s.min.min(v),
            max: s.max.max(v),
        })
    }
}

impl KAggregate {
    /// Aggregates `rows`, all of which share cutoff `k`.
    pub fn from_rows(k: usize, rows: &[&QueryMetrics]) -> Self {
        let n = rows.len() as f64;
        let p = Stat::of(rows.iter().map(|r| r.precision));
        let r = Stat::of(rows.iter().map(|r| r.recall));
        let g = Stat::of(rows.iter().map(|r| r.ndcg));
        let t = Stat::of(rows.iter().map(|r| r.elapsed.as_secs_f64() * 1e6));
        Self {
            k,
            queries: rows.len(),
            mean_precision: p.sum / n,
            min_precision: p.min,
            max_precision: p.max,
            mean_recall: r.sum / n,
            min_recall: r.min,
            max_recall: r.max,
            mean_ndcg: g.sum / n,
            min_ndcg: g.min,
            max_ndcg: g.max,
            mean_elapsed_us: t.sum / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_tag: String,
    pub policy: SelfMatchPolicy,
    pub k_values: Vec<usize>,
    #[serde(rename = "rows")]
    pub per_query: Vec<QueryMetrics>,
    pub aggregates: Vec<KAggregate>,
}

impl EvalReport {
    pub fn new(
        model_tag: String,
        policy: SelfMatchPolicy,
        k_values: Vec<usize>,
        mut per_query: Vec<QueryMetrics>,
    ) -> Self {
        per_query.sort_by_key(|r| (r.query_row, r.k));
        let aggregates = Self::aggregate(&k_values, &per_query);
        Self { model_tag, policy, k_values, per_query, aggregates }
    }

    pub fn with_model_tag(mut self, tag: impl Into<String>) -> Self {
        self.model_tag = tag.into();
        self
    }

    pub fn at_k(&self, k: usize) -> Option<&KAggregate> {
        self.aggregates.iter().find(|a| a.k == k)
    }

    /// Per-`k` aggregates, skipping cutoffs with no rows.
    pub fn aggregate(k_values: &[usize], rows: &[QueryMetrics]) -> Vec<KAggregate> {
        k_values
            .iter()
            .filter_map(|&k| {
                let at_k: Vec<&QueryMetrics> = rows.iter().filter(|r| r.k == k).collect();
                (!at_k.is_empty()).then(|| KAggregate::from_rows(k, &at_k))
            })
            .collect()
    }

    pub fn vacuous_count(&self) -> usize {
        self.per_query.iter().filter(|r| r.vacuous).count()
    }

    pub fn write_json<W: Write>(&self, sink: W) -> Result<(), MetricsError> {
        serde_json::to_writer_pretty(sink, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(source: R) -> Result<Self, MetricsError> {
        Ok(serde_json::from_reader(source)?)
    }

    /// Per-query table with search time in seconds to 6 decimals.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<(), MetricsError> {
        writeln!(sink, "{CSV_HEADER}")?;
        for r in &self.per_query {
            writeln!(
                sink,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                r.query_row,
                r.k,
                r.precision,
                r.recall,
                r.ndcg,
                r.elapsed.as_secs_f64()
            )?;
        }
        sink.flush()?;
        Ok(())
    }
}
