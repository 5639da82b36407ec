use std::cmp::Ordering;

use super::{RecommendError, Recommender};
use crate::data::{TrackIdx, UserIdx};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub track: TrackIdx,
    pub score: f64,
}

/// Top-k unseen items for one user: scores non-increasing, ties broken by
/// ascending track index.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    pub user: UserIdx,
    pub entries: Vec<ScoredItem>,
}

impl RecommendationList {
    pub fn tracks(&self) -> Vec<TrackIdx> {
        self.entries.iter().map(|e| e.track).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn sanitize(s: f64) -> f64 {
    if s.is_nan() {
        f64::NEG_INFINITY
    } else {
        s
    }
}

fn rank_order(a: &ScoredItem, b: &ScoredItem) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.track.cmp(&b.track))
}

/// Selects the `k` best items from `scores`, skipping every index in
/// `excluded` (sorted ascending).
pub fn top_k_from_scores(scores: &[f64], k: usize, excluded: &[TrackIdx]) -> Vec<ScoredItem> {
    let mut candidates = Vec::with_capacity(scores.len().saturating_sub(excluded.len()));
    let mut skip = excluded.iter().peekable();
    for (i, &s) in scores.iter().enumerate() {
        while skip.peek().is_some_and(|t| t.index() < i) {
            skip.next();
        }
        if skip.peek().is_some_and(|t| t.index() == i) {
            continue;
        }
        candidates.push(ScoredItem {
            track: TrackIdx(i as u32),
            score: sanitize(s),
        });
    }
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, rank_order);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(rank_order);
    candidates
}

/// Ranks all items for `user` and returns the `k` best not in `seen`
/// (sorted ascending).
pub fn recommend_top_k(
    model: &dyn Recommender,
    user: UserIdx,
    k: usize,
    seen: &[TrackIdx],
) -> Result<RecommendationList, RecommendError> {
    if k == 0 {
        return Err(RecommendError::InvalidK);
    }
    debug_assert!(seen.windows(2).all(|w| w[0] < w[1]));
    let scores = model.scores(user)?;
    Ok(RecommendationList {
        user,
        entries: top_k_from_scores(&scores, k, seen),
    })
}
