use std::collections::BTreeMap;

use crate::data::{CountryLabel, InteractionDataset, TrackIdx, UserIdx};

/// Metric names as they appear in the output files.
pub mod metric {
    pub const REC_LOCAL: &str = "rec_local";
    pub const REC_US: &str = "rec_us";
    pub const REC_COUNTRY_JSD: &str = "rec_country_jsd";
    pub const PROF_LOCAL: &str = "prof_local";
    pub const PROF_US: &str = "prof_us";
    pub const PROF_COUNTRY_JSD: &str = "prof_country_jsd";
    pub const PROF_POP_JSD_CURRENT: &str = "prof_pop_jsd_current";
    pub const PROF_POP_JSD_FROZEN: &str = "prof_pop_jsd_frozen";
    pub const NDCG_VALIDATION: &str = "ndcg_validation";
    pub const USERS: &str = "users";
    pub const SKIPPED_USERS: &str = "skipped_users";

    /// Per-user metrics, in output order.
    pub const PER_USER: [&str; 8] = [
        REC_LOCAL,
        REC_US,
        REC_COUNTRY_JSD,
        PROF_LOCAL,
        PROF_US,
        PROF_COUNTRY_JSD,
        PROF_POP_JSD_CURRENT,
        PROF_POP_JSD_FROZEN,
    ];
}

/// One user's measurements at one iteration. Recommendation-side values are
/// `None` when the user got no recommendations.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub user: UserIdx,
    pub rec_local: Option<f64>,
    pub rec_us: Option<f64>,
    /// Country JSD between the recommendation list and the initial profile.
    pub rec_country_jsd: Option<f64>,
    pub prof_local: f64,
    pub prof_us: f64,
    /// Country JSD between the current and the initial profile.
    pub prof_country_jsd: f64,
    pub prof_pop_jsd_current: f64,
    pub prof_pop_jsd_frozen: f64,
    pub accepted: Option<TrackIdx>,
}

impl UserRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            metric::REC_LOCAL => self.rec_local,
            metric::REC_US => self.rec_us,
            metric::REC_COUNTRY_JSD => self.rec_country_jsd,
            metric::PROF_LOCAL => Some(self.prof_local),
            metric::PROF_US => Some(self.prof_us),
            metric::PROF_COUNTRY_JSD => Some(self.prof_country_jsd),
            metric::PROF_POP_JSD_CURRENT => Some(self.prof_pop_jsd_current),
            metric::PROF_POP_JSD_FROZEN => Some(self.prof_pop_jsd_frozen),
            _ => None,
        }
    }
}

/// Everything measured at one iteration. Iteration 0 is the initial dataset:
/// no model, no recommendations.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u32,
    pub validation_ndcg: Option<f64>,
    /// Indexed by user.
    pub users: Vec<UserRecord>,
    /// Users whose recommendation list came back empty.
    pub skipped_users: usize,
    /// Recommended items found in the user's seen-set. Always 0 unless the
    /// exclusion logic is broken.
    pub exclusion_violations: usize,
}

/// Means of the per-user metrics over a group of users.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricMeans {
    pub users: usize,
    /// Metric name to mean; metrics no user in the group has are absent.
    pub means: BTreeMap<&'static str, f64>,
}

impl MetricMeans {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.means.get(name).copied()
    }
}

fn means_of<'a>(records: impl Iterator<Item = &'a UserRecord>) -> MetricMeans {
    let mut sums = [(0.0f64, 0usize); metric::PER_USER.len()];
    let mut users = 0;
    for r in records {
        users += 1;
        for (slot, name) in sums.iter_mut().zip(metric::PER_USER) {
            if let Some(v) = r.get(name) {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    let means = metric::PER_USER
        .iter()
        .zip(sums)
        .filter(|(_, (_, n))| *n > 0)
        .map(|(&name, (s, n))| (name, s / n as f64))
        .collect();
    MetricMeans { users, means }
}

impl IterationRecord {
    pub fn population_means(&self) -> MetricMeans {
        means_of(self.users.iter())
    }

    /// Means grouped by user country.
    pub fn country_means(&self, ds: &InteractionDataset) -> BTreeMap<CountryLabel, MetricMeans> {
        let mut groups: BTreeMap<CountryLabel, Vec<&UserRecord>> = BTreeMap::new();
        for r in &self.users {
            groups.entry(ds.user(r.user).country).or_default().push(r);
        }
        groups
            .into_iter()
            .map(|(c, rs)| (c, means_of(rs.into_iter())))
            .collect()
    }

    /// The accepted items, by user.
    pub fn accepted(&self) -> BTreeMap<UserIdx, TrackIdx> {
        self.users
            .iter()
            .filter_map(|r| r.accepted.map(|t| (r.user, t)))
            .collect()
    }
}
