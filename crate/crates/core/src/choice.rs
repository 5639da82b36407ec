//! Rank-based acceptance: which recommended item a simulated user consumes.
//!
//! The item at 1-based rank `r` of a list of length `k` is accepted with
//! probability `exp(alpha * r) / sum_{j=1..k} exp(alpha * j)`. With
//! `alpha < 0` earlier ranks are more likely. Exactly one item is accepted
//! from every non-empty list.

use std::sync::Once;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::TrackIdx;
use crate::recommend::RecommendationList;

#[derive(Debug, Error, PartialEq)]
pub enum ChoiceError {
    #[error("list length k must be at least 1")]
    ZeroLength,
    #[error("no acceptable item: the recommendation list is empty")]
    NoAcceptableItem,
    #[error("alpha must be finite, got {0}")]
    NonFiniteAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChoiceConfig {
    pub alpha: f64,
    pub k: usize,
}

impl Default for ChoiceConfig {
    fn default() -> Self {
        Self { alpha: -0.1, k: 10 }
    }
}

static NON_NEGATIVE_ALPHA: Once = Once::new();

/// Acceptance probability per rank for a list of length `k`.
///
/// `alpha >= 0` is accepted so that limiting cases can be tested, but it
/// inverts or flattens the rank preference and logs a warning once.
pub fn acceptance_probabilities(k: usize, alpha: f64) -> Result<Vec<f64>, ChoiceError> {
    if k == 0 {
        return Err(ChoiceError::ZeroLength);
    }
    if !alpha.is_finite() {
        return Err(ChoiceError::NonFiniteAlpha(alpha));
    }
    if alpha >= 0.0 {
        NON_NEGATIVE_ALPHA.call_once(|| {
            log::warn!("acceptance alpha {alpha} >= 0: rank preference is flat or inverted");
        });
    }
    // Shift so the largest weight is exp(0) = 1: rank 1 for alpha < 0,
    // rank k otherwise. The shift cancels in the normalization.
    let anchor = if alpha < 0.0 { 1.0 } else { k as f64 };
    let weights: Vec<f64> = (1..=k)
        .map(|r| (alpha * (r as f64 - anchor)).exp())
        .collect();
    let total = neumaier_sum(&weights);
    Ok(weights.into_iter().map(|w| w / total).collect())
}

fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Inverse-CDF draw of a 0-based rank from `probs`.
pub fn sample_rank<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (r, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return r;
        }
    }
    probs.len() - 1
}

/// Draws the accepted item. Probabilities are computed for the actual list
/// length, so short lists renormalize over the items they have.
pub fn sample_accepted_item<R: Rng + ?Sized>(
    rec: &RecommendationList,
    cfg: &ChoiceConfig,
    rng: &mut R,
) -> Result<TrackIdx, ChoiceError> {
    if rec.is_empty() {
        return Err(ChoiceError::NoAcceptableItem);
    }
    let probs = acceptance_probabilities(rec.len(), cfg.alpha)?;
    Ok(rec.entries[sample_rank(&probs, rng)].track)
}
