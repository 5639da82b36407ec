//! Ingestion-time filters. All of them are idempotent.

use serde::{Deserialize, Serialize};

use super::{DataError, InteractionDataset};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterOptions {
    /// Drop rows whose user or track country column is empty. When unset,
    /// empty countries become `OTHER`.
    pub drop_unknown_country: bool,
    /// Drop tracks with fewer interactions than this (single pass). `0` and
    /// `1` disable the filter.
    pub min_track_interactions: usize,
    /// Iterative k-core filtering on both users and tracks.
    pub k_core: Option<usize>,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            drop_unknown_country: true,
            min_track_interactions: 2,
            k_core: Some(5),
        }
    }
}

impl FilterOptions {
    /// No filtering at all.
    pub fn none() -> Self {
        Self {
            drop_unknown_country: false,
            min_track_interactions: 0,
            k_core: None,
        }
    }
}

/// Applies the dataset-level filters (track minimum, then k-core) until
/// neither removes anything. K-core pruning can push a track back under the
/// minimum, so one pass is not enough.
pub fn apply_filters(
    ds: &InteractionDataset,
    opts: &FilterOptions,
) -> Result<InteractionDataset, DataError> {
    let mut out = ds.clone();
    loop {
        let before = out.num_interactions();
        out = min_track_interactions(&out, opts.min_track_interactions);
        if let Some(k) = opts.k_core {
            out = k_core(&out, k);
        }
        if out.num_interactions() == before {
            break;
        }
    }
    if out.is_empty() {
        return Err(DataError::EmptyAfterFiltering);
    }
    Ok(out)
}

/// Removes tracks with fewer than `min` interactions. Removing a track never
/// changes the count of another track, so one pass is a fixpoint.
pub fn min_track_interactions(ds: &InteractionDataset, min: usize) -> InteractionDataset {
    if min <= 1 {
        return ds.clone();
    }
    let counts = ds.track_interaction_counts();
    let keep: Vec<bool> = ds
        .interactions()
        .iter()
        .map(|i| counts[i.track.index()] as usize >= min)
        .collect();
    ds.retain_interactions(&keep)
}

/// Iteratively drops users and tracks with fewer than `k` interactions until
/// every remaining user and track has at least `k`.
pub fn k_core(ds: &InteractionDataset, k: usize) -> InteractionDataset {
    if k <= 1 {
        return ds.clone();
    }
    let interactions = ds.interactions();
    let mut alive = vec![true; interactions.len()];
    let mut user_deg = ds.user_interaction_counts();
    let mut track_deg = ds.track_interaction_counts();
    let k = k as u32;
    loop {
        let mut changed = false;
        for (idx, it) in interactions.iter().enumerate() {
            if alive[idx]
                && (user_deg[it.user.index()] < k || track_deg[it.track.index()] < k)
            {
                alive[idx] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        user_deg.iter_mut().for_each(|d| *d = 0);
        track_deg.iter_mut().for_each(|d| *d = 0);
        for (idx, it) in interactions.iter().enumerate() {
            if alive[idx] {
                user_deg[it.user.index()] += 1;
                track_deg[it.track.index()] += 1;
            }
        }
    }
    ds.retain_interactions(&alive)
}
