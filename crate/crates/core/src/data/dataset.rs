use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{CountryLabel, DataError};

/// Dense index of a user. Users are indexed in ascending id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserIdx(pub u32);

/// Dense index of a track. Tracks are indexed in ascending id order, so
/// comparing indices is the same as comparing track ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrackIdx(pub u32);

impl UserIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TrackIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserMeta {
    pub id: String,
    pub country: CountryLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackMeta {
    pub id: String,
    pub country: CountryLabel,
}

/// Where an interaction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Initial,
    /// Accepted by the simulated user at the given loop iteration (1-based).
    Augmented(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub user: UserIdx,
    pub track: TrackIdx,
    /// Play count from the source file. Models only see presence.
    pub count: u32,
    pub provenance: Provenance,
}

/// Users, tracks and the binarized interaction set.
///
/// Each (user, track) pair occurs at most once; repeated listens are folded
/// into `count`. Interactions keep insertion order, so a user's profile lists
/// initial items first and simulated items in iteration order.
#[derive(Debug, Clone)]
pub struct InteractionDataset {
    users: Vec<UserMeta>,
    tracks: Vec<TrackMeta>,
    interactions: Vec<Interaction>,
    profiles: Vec<Vec<TrackIdx>>,
    // per user, sorted
    seen: Vec<Vec<TrackIdx>>,
    user_lookup: HashMap<String, UserIdx>,
    track_lookup: HashMap<String, TrackIdx>,
}

impl InteractionDataset {
    /// Builds a dataset from already-indexed parts.
    ///
    /// `users` and `tracks` must be sorted by id with unique ids, and every
    /// interaction must reference them and be unique per pair.
    pub fn from_parts(
        users: Vec<UserMeta>,
        tracks: Vec<TrackMeta>,
        interactions: Vec<Interaction>,
    ) -> Result<Self, DataError> {
        if !users.windows(2).all(|w| w[0].id < w[1].id) {
            return Err(DataError::Invariant("user ids must be unique and sorted".into()));
        }
        if !tracks.windows(2).all(|w| w[0].id < w[1].id) {
            return Err(DataError::Invariant("track ids must be unique and sorted".into()));
        }
        let mut profiles = vec![Vec::new(); users.len()];
        for it in &interactions {
            if it.user.index() >= users.len() || it.track.index() >= tracks.len() {
                return Err(DataError::Invariant(format!(
                    "interaction ({}, {}) references a missing user or track",
                    it.user.0, it.track.0
                )));
            }
            profiles[it.user.index()].push(it.track);
        }
        let mut seen = Vec::with_capacity(profiles.len());
        for (u, items) in profiles.iter().enumerate() {
            let mut s = items.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(DataError::Invariant(format!(
                    "user {} has a duplicated (user, track) pair",
                    users[u].id
                )));
            }
            seen.push(s);
        }
        let user_lookup = users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.id.clone(), UserIdx(i as u32)))
            .collect();
        let track_lookup = tracks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), TrackIdx(i as u32)))
            .collect();
        Ok(Self {
            users,
            tracks,
            interactions,
            profiles,
            seen,
            user_lookup,
            track_lookup,
        })
    }

    pub fn users(&self) -> &[UserMeta] {
        &self.users
    }

    pub fn tracks(&self) -> &[TrackMeta] {
        &self.tracks
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_tracks(&self) -> usize {
        self.tracks.len()
    }

    pub fn num_interactions(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    pub fn user(&self, u: UserIdx) -> &UserMeta {
        &self.users[u.index()]
    }

    pub fn track(&self, t: TrackIdx) -> &TrackMeta {
        &self.tracks[t.index()]
    }

    pub fn user_ids(&self) -> impl Iterator<Item = UserIdx> {
        (0..self.users.len() as u32).map(UserIdx)
    }

    pub fn user_index(&self, id: &str) -> Option<UserIdx> {
        self.user_lookup.get(id).copied()
    }

    pub fn track_index(&self, id: &str) -> Option<TrackIdx> {
        self.track_lookup.get(id).copied()
    }

    pub fn track_countries(&self) -> Vec<CountryLabel> {
        self.tracks.iter().map(|t| t.country).collect()
    }

    /// Items of the user in interaction order: initial history first, then
    /// accepted items by iteration.
    pub fn profile(&self, u: UserIdx) -> &[TrackIdx] {
        &self.profiles[u.index()]
    }

    /// Distinct items of the user, sorted by index.
    pub fn seen(&self, u: UserIdx) -> &[TrackIdx] {
        &self.seen[u.index()]
    }

    pub fn has_seen(&self, u: UserIdx, t: TrackIdx) -> bool {
        self.seen[u.index()].binary_search(&t).is_ok()
    }

    /// Number of interactions per track.
    pub fn track_interaction_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.tracks.len()];
        for it in &self.interactions {
            counts[it.track.index()] += 1;
        }
        counts
    }

    pub fn user_interaction_counts(&self) -> Vec<u32> {
        self.profiles.iter().map(|p| p.len() as u32).collect()
    }

    /// The interactions marked [`Provenance::Initial`].
    pub fn initial_interaction_count(&self) -> usize {
        self.interactions
            .iter()
            .filter(|i| i.provenance == Provenance::Initial)
            .count()
    }

    /// Returns a new dataset with one augmented interaction per accepted
    /// `(user, track)` entry.
    pub fn augment(
        &self,
        accepted: &BTreeMap<UserIdx, TrackIdx>,
        iteration: u32,
    ) -> Result<Self, DataError> {
        let mut next = self.clone();
        for (&u, &t) in accepted {
            if u.index() >= next.users.len() || t.index() >= next.tracks.len() {
                return Err(DataError::Invariant(format!(
                    "accepted pair ({}, {}) is out of range",
                    u.0, t.0
                )));
            }
            let seen = &mut next.seen[u.index()];
            match seen.binary_search(&t) {
                Ok(_) => {
                    return Err(DataError::Invariant(format!(
                        "user {} accepted already-seen track {}",
                        next.users[u.index()].id,
                        next.tracks[t.index()].id
                    )))
                }
                Err(pos) => seen.insert(pos, t),
            }
            next.profiles[u.index()].push(t);
            next.interactions.push(Interaction {
                user: u,
                track: t,
                count: 1,
                provenance: Provenance::Augmented(iteration),
            });
        }
        Ok(next)
    }

    /// Keeps only the interactions where `keep` is true, dropping users and
    /// tracks left without interactions and re-indexing the rest.
    pub(crate) fn retain_interactions(&self, keep: &[bool]) -> Self {
        debug_assert_eq!(keep.len(), self.interactions.len());
        let mut user_used = vec![false; self.users.len()];
        let mut track_used = vec![false; self.tracks.len()];
        for (it, &k) in self.interactions.iter().zip(keep) {
            if k {
                user_used[it.user.index()] = true;
                track_used[it.track.index()] = true;
            }
        }
        let (users, user_map) = reindex(&self.users, &user_used);
        let (tracks, track_map) = reindex(&self.tracks, &track_used);
        let interactions = self
            .interactions
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(it, _)| Interaction {
                user: UserIdx(user_map[it.user.index()]),
                track: TrackIdx(track_map[it.track.index()]),
                ..*it
            })
            .collect();
        // Subsets of a valid dataset stay valid.
        Self::from_parts(users, tracks, interactions).expect("subset of a valid dataset")
    }

    /// Initial-provenance part of the dataset, with the same user and track
    /// indexing as `self`.
    pub fn initial_only(&self) -> Self {
        let interactions = self
            .interactions
            .iter()
            .filter(|i| i.provenance == Provenance::Initial)
            .copied()
            .collect();
        Self::from_parts(self.users.clone(), self.tracks.clone(), interactions)
            .expect("subset of a valid dataset")
    }
}

fn reindex<T: Clone>(items: &[T], used: &[bool]) -> (Vec<T>, Vec<u32>) {
    let mut out = Vec::new();
    let mut map = vec![u32::MAX; items.len()];
    for (i, item) in items.iter().enumerate() {
        if used[i] {
            map[i] = out.len() as u32;
            out.push(item.clone());
        }
    }
    (out, map)
}

/// Collects string-keyed rows and interns them into an [`InteractionDataset`].
///
/// Duplicate (user, track) rows are merged by summing their counts.
#[derive(Debug, Default)]
pub struct DatasetBuilder {
    users: BTreeMap<String, CountryLabel>,
    tracks: BTreeMap<String, CountryLabel>,
    rows: Vec<(String, String, u32, Provenance)>,
}

impl DatasetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_user(&mut self, id: &str, country: CountryLabel) -> Result<(), DataError> {
        insert_consistent(&mut self.users, id, country, "user")
    }

    pub fn add_track(&mut self, id: &str, country: CountryLabel) -> Result<(), DataError> {
        insert_consistent(&mut self.tracks, id, country, "track")
    }

    /// Adds an interaction between a user and a track that were registered
    /// before.
    pub fn add_interaction(
        &mut self,
        user: &str,
        track: &str,
        count: u32,
        provenance: Provenance,
    ) -> Result<(), DataError> {
        if !self.users.contains_key(user) {
            return Err(DataError::UnknownId {
                kind: "user",
                id: user.to_string(),
            });
        }
        if !self.tracks.contains_key(track) {
            return Err(DataError::UnknownId {
                kind: "track",
                id: track.to_string(),
            });
        }
        self.rows
            .push((user.to_string(), track.to_string(), count, provenance));
        Ok(())
    }

    pub fn build(self) -> Result<InteractionDataset, DataError> {
        let users: Vec<UserMeta> = self
            .users
            .into_iter()
            .map(|(id, country)| UserMeta { id, country })
            .collect();
        let tracks: Vec<TrackMeta> = self
            .tracks
            .into_iter()
            .map(|(id, country)| TrackMeta { id, country })
            .collect();
        let user_idx: HashMap<&str, u32> = users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.id.as_str(), i as u32))
            .collect();
        let track_idx: HashMap<&str, u32> = tracks
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.as_str(), i as u32))
            .collect();

        let mut position: HashMap<(u32, u32), usize> = HashMap::new();
        let mut interactions: Vec<Interaction> = Vec::with_capacity(self.rows.len());
        for (u, t, count, provenance) in &self.rows {
            let key = (user_idx[u.as_str()], track_idx[t.as_str()]);
            match position.get(&key) {
                Some(&p) => interactions[p].count = interactions[p].count.saturating_add(*count),
                None => {
                    position.insert(key, interactions.len());
                    interactions.push(Interaction {
                        user: UserIdx(key.0),
                        track: TrackIdx(key.1),
                        count: *count,
                        provenance: *provenance,
                    });
                }
            }
        }
        // Users or tracks registered without interactions are dropped.
        let keep = vec![true; interactions.len()];
        Ok(InteractionDataset::from_parts(users, tracks, interactions)?.retain_interactions(&keep))
    }
}

fn insert_consistent(
    map: &mut BTreeMap<String, CountryLabel>,
    id: &str,
    country: CountryLabel,
    kind: &str,
) -> Result<(), DataError> {
    match map.get(id) {
        Some(&existing) if existing != country => Err(DataError::Invariant(format!(
            "{kind} {id} has conflicting countries {existing} and {country}"
        ))),
        Some(_) => Ok(()),
        None => {
            map.insert(id.to_string(), country);
            Ok(())
        }
    }
}
