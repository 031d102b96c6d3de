//! Binary-relevance ranking metrics at a cutoff `k`.

use super::MetricsError;
use crate::index::RankedResult;
use crate::interchange::{Birads, LabelTable};

/// Relevance of each retrieved item, best-ranked first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelevanceVector(Vec<bool>);

impl RelevanceVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Nonzero entries are relevant.
    pub fn from_bits(bits: &[u8]) -> Self {
        Self(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Relevant items among the first `k`.
    pub fn hits(&self, k: usize) -> usize {
        self.0.iter().take(k).filter(|&&b| b).count()
    }
}

/// Marks neighbors whose label equals `query_label`.
pub fn relevance_vector(
    result: &RankedResult,
    query_label: Birads,
    labels: &LabelTable,
) -> Result<RelevanceVector, MetricsError> {
    result
        .ids()
        .map(|id| {
            labels
                .label(id)
                .map(|l| l == query_label)
                .ok_or(MetricsError::UnknownNeighbor(id))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(RelevanceVector)
}

/// Relevant fraction of the top `k`. When fewer than `k` items were retrieved
/// the denominator is the number retrieved; an empty retrieval scores 0.
pub fn precision_at_k(rel: &RelevanceVector, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    let retrieved = k.min(rel.len());
    if retrieved == 0 {
        return Ok(0.0);
    }
    Ok(rel.hits(k) as f64 / retrieved as f64)
}

/// Fraction of all `total_relevant` items found in the top `k`.
pub fn recall_at_k(rel: &RelevanceVector, k: usize, total_relevant: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    if total_relevant == 0 {
        return Err(MetricsError::UndefinedRecall { query_row: None });
    }
    Ok(rel.hits(k) as f64 / total_relevant as f64)
}

#[inline]
fn discount(position: usize) -> f64 {
    // position is 1-based
    ((position + 1) as f64).log2()
}

/// Discounted cumulative gain with exponential gain `2^rel - 1`.
pub fn dcg_at_k(rel: &RelevanceVector, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    Ok(rel
        .bits()
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &r)| {
            let gain = if r { 1.0 } else { 0.0 };
            gain / discount(i + 1)
        })
        .sum())
}

/// DCG of the best possible ordering: `min(k, total_relevant)` relevant items
/// ranked first.
pub fn ideal_dcg_at_k(k: usize, total_relevant: usize) -> f64 {
    (1..=k.min(total_relevant)).map(|i| 1.0 / discount(i)).sum()
}

/// `DCG@k / IDCG@k`. A query with nothing relevant to find scores 1.0.
pub fn ndcg_at_k(rel: &RelevanceVector, k: usize, total_relevant: usize) -> Result<f64, MetricsError> {
    let dcg = dcg_at_k(rel, k)?;
    let ideal = ideal_dcg_at_k(k, total_relevant);
    if ideal == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg / ideal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Neighbor;
    use std::time::Duration;

    fn rv(bits: &[u8]) -> RelevanceVector {
        RelevanceVector::from_bits(bits)
    }

    #[test]
    fn relevance_from_labels() {
        let labels = LabelTable::from_pairs(
            [4u8, 4, 2, 1].iter().enumerate().map(|(i, &l)| (i.to_string(), Birads::new(l).unwrap())),
        );
        let result = RankedResult {
            query_row: None,
            neighbors: [0, 1, 2].iter().map(|&id| Neighbor { id, score: 0.0 }).collect(),
            elapsed: Duration::ZERO,
        };
        let four = Birads::new(4).unwrap();
        assert_eq!(relevance_vector(&result, four, &labels).unwrap(), rv(&[1, 1, 0]));

        let empty = RankedResult { neighbors: vec![], ..result.clone() };
        assert!(relevance_vector(&empty, four, &labels).unwrap().is_empty());

        let same = RankedResult { neighbors: result.neighbors[..2].to_vec(), ..result.clone() };
        assert_eq!(relevance_vector(&same, four, &labels).unwrap(), rv(&[1, 1]));

        let unknown = RankedResult { neighbors: vec![Neighbor { id: 9, score: 0.0 }], ..result };
        assert!(matches!(relevance_vector(&unknown, four, &labels), Err(MetricsError::UnknownNeighbor(9))));
    }

    #[test]
    fn precision_examples() {
        assert_eq!(precision_at_k(&rv(&[1, 1, 1, 1, 0]), 5).unwrap(), 0.8);
        assert_eq!(precision_at_k(&rv(&[1]), 1).unwrap(), 1.0);
        assert_eq!(precision_at_k(&rv(&[0, 0, 0]), 3).unwrap(), 0.0);
        assert_eq!(precision_at_k(&rv(&[1, 0]), 10).unwrap(), 0.5);
        assert!(matches!(precision_at_k(&rv(&[1]), 0), Err(MetricsError::ZeroK)));
    }

    #[test]
    fn recall_examples() {
        let r = recall_at_k(&rv(&[1]), 1, 801).unwrap();
        assert_eq!(format!("{r:.6}"), "0.001248");
        assert_eq!(recall_at_k(&rv(&[1, 1, 1, 1]), 4, 8).unwrap(), 0.5);
        assert_eq!(recall_at_k(&rv(&[0; 7]), 7, 3).unwrap(), 0.0);
        assert!(matches!(recall_at_k(&rv(&[0]), 1, 0), Err(MetricsError::UndefinedRecall { .. })));
    }

    #[test]
    fn dcg_examples() {
        assert_eq!(dcg_at_k(&rv(&[1, 0, 1]), 3).unwrap(), 1.5);
        assert_eq!(dcg_at_k(&rv(&[0, 0, 0, 0]), 4).unwrap(), 0.0);
        assert_eq!(dcg_at_k(&rv(&[1, 0, 1]), 1).unwrap(), 1.0);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&rv(&[1, 1, 1]), 3, 3).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&rv(&[1, 1, 1]), 3, 50).unwrap(), 1.0);
        let v = ndcg_at_k(&rv(&[1, 0, 1]), 3, 2).unwrap();
        assert!((v - 1.5 / (1.0 + 1.0 / 3f64.log2())).abs() < 1e-12);
        let late = ndcg_at_k(&rv(&[0, 1, 1, 1, 1]), 5, 10).unwrap();
        let early = ndcg_at_k(&rv(&[1, 1, 1, 1, 0]), 5, 10).unwrap();
        assert!(late < early);
        assert_eq!(ndcg_at_k(&rv(&[0, 0]), 2, 0).unwrap(), 1.0);
    }
}
