use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ranking::{ndcg_at_k, precision_at_k, recall_at_k, relevance_vector};
use super::report::{EvalReport, QueryMetrics};
use super::MetricsError;
use crate::index::{RankedResult, VectorIndex};
use crate::interchange::{Birads, LabelTable};

/// Whether a corpus-row query may retrieve itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfMatchPolicy {
    #[default]
    Include,
    Exclude,
}

impl fmt::Display for SelfMatchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelfMatchPolicy::Include => "include",
            SelfMatchPolicy::Exclude => "exclude",
        })
    }
}

impl FromStr for SelfMatchPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "include" => Ok(Self::Include),
            "exclude" => Ok(Self::Exclude),
            other => Err(format!("unknown self-match policy {other:?} (expected include or exclude)")),
        }
    }
}

/// Number of corpus rows per label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts([usize; Birads::MAX as usize + 1]);

impl ClassCounts {
    pub fn from_labels(labels: &LabelTable) -> Self {
        let mut counts = [0; Birads::MAX as usize + 1];
        for l in labels.labels() {
            counts[l.get() as usize] += 1;
        }
        Self(counts)
    }

    pub fn get(&self, label: Birads) -> usize {
        self.0[label.get() as usize]
    }

    /// Relevant items a query with `label` can retrieve under `policy`.
    pub fn total_relevant(&self, label: Birads, policy: SelfMatchPolicy) -> usize {
        match policy {
            SelfMatchPolicy::Include => self.get(label),
            SelfMatchPolicy::Exclude => self.get(label).saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    pub policy: SelfMatchPolicy,
    /// Keep queries whose class has no other member as flagged rows instead
    /// of failing the sweep.
    pub allow_vacuous: bool,
}

fn check_labels(index: &VectorIndex, labels: &LabelTable) -> Result<(), MetricsError> {
    if index.count() != labels.len() {
        return Err(MetricsError::LabelCountMismatch { index: index.count(), labels: labels.len() });
    }
    Ok(())
}

/// Searches for corpus row `query_row` and drops the row itself under
/// [`SelfMatchPolicy::Exclude`].
pub fn retrieve_row(
    index: &VectorIndex,
    query_row: usize,
    k: usize,
    policy: SelfMatchPolicy,
) -> Result<RankedResult, MetricsError> {
    match policy {
        SelfMatchPolicy::Include => Ok(index.search_row(query_row, k)?),
        SelfMatchPolicy::Exclude => {
            let mut result = index.search_row(query_row, k.saturating_add(1))?;
            match result.neighbors.iter().position(|n| n.id == query_row) {
                Some(pos) => {
                    result.neighbors.remove(pos);
                }
                // Duplicates of the query can push it past the cutoff.
                None => result.neighbors.truncate(k),
            }
            Ok(result)
        }
    }
}

fn evaluate_with_counts(
    index: &VectorIndex,
    labels: &LabelTable,
    counts: &ClassCounts,
    query_row: usize,
    k: usize,
    policy: SelfMatchPolicy,
) -> Result<QueryMetrics, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    let query_label = labels
        .label(query_row)
        .ok_or(MetricsError::QueryOutOfRange { row: query_row, count: labels.len() })?;
    let total_relevant = counts.total_relevant(query_label, policy);

    let result = retrieve_row(index, query_row, k, policy)?;
    let rel = relevance_vector(&result, query_label, labels)?;
    let vacuous = total_relevant == 0;
    let recall = if vacuous { 0.0 } else { recall_at_k(&rel, k, total_relevant)? };

    Ok(QueryMetrics {
        query_row,
        k,
        precision: precision_at_k(&rel, k)?,
        recall,
        ndcg: ndcg_at_k(&rel, k, total_relevant)?,
        elapsed: result.elapsed,
        vacuous,
    })
}

/// Metrics for one corpus-row query at cutoff `k`. Relevance is label
/// equality; the relevant population is every corpus row sharing the query's
/// label (less the query itself under `Exclude`).
pub fn evaluate_query(
    index: &VectorIndex,
    labels: &LabelTable,
    query_row: usize,
    k: usize,
    policy: SelfMatchPolicy,
) -> Result<QueryMetrics, MetricsError> {
    check_labels(index, labels)?;
    let counts = ClassCounts::from_labels(labels);
    let m = evaluate_with_counts(index, labels, &counts, query_row, k, policy)?;
    if m.vacuous {
        return Err(MetricsError::UndefinedRecall { query_row: Some(query_row) });
    }
    Ok(m)
}

/// Evaluates every `(query, k)` pair. Rows come back sorted by query then
/// `k` regardless of how the work was scheduled.
pub fn sweep(
    index: &VectorIndex,
    labels: &LabelTable,
    query_rows: &[usize],
    k_values: &[usize],
    options: SweepOptions,
) -> Result<EvalReport, MetricsError> {
    check_labels(index, labels)?;
    if k_values.is_empty() {
        return Err(MetricsError::EmptyKValues);
    }
    if k_values.contains(&0) {
        return Err(MetricsError::ZeroK);
    }
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut queries = query_rows.to_vec();
    queries.sort_unstable();
    queries.dedup();
    if let Some(&row) = queries.iter().find(|&&q| q >= index.count()) {
        return Err(MetricsError::QueryOutOfRange { row, count: index.count() });
    }

    let counts = ClassCounts::from_labels(labels);
    let cells: Vec<(usize, usize)> =
        queries.iter().flat_map(|&q| ks.iter().map(move |&k| (q, k))).collect();
    let rows = cells
        .par_iter()
        .map(|&(q, k)| evaluate_with_counts(index, labels, &counts, q, k, options.policy))
        .collect::<Result<Vec<_>, _>>()?;

    if !options.allow_vacuous {
        if let Some(v) = rows.iter().find(|r| r.vacuous) {
            return Err(MetricsError::UndefinedRecall { query_row: Some(v.query_row) });
        }
    }
    Ok(EvalReport::new(String::new(), options.policy, ks, rows))
}
