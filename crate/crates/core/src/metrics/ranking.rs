use std::collections::HashSet;

use crate::data::TrackIdx;

/// Binary-relevance NDCG@k with discount `1 / log2(rank + 1)`. The ideal DCG
/// places `min(k, |relevant|)` relevant items on top. Returns 0 when nothing
/// is relevant.
pub fn ndcg_at_k(ranked: &[TrackIdx], relevant: &[TrackIdx], k: usize) -> f64 {
    if relevant.is_empty() || k == 0 {
        return 0.0;
    }
    let relevant: HashSet<TrackIdx> = relevant.iter().copied().collect();
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, t)| relevant.contains(t))
        .map(|(i, _)| discount(i + 1))
        .sum();
    let ideal: f64 = (1..=k.min(relevant.len())).map(discount).sum();
    dcg / ideal
}
