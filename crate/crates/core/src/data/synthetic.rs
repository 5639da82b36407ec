//! Synthetic datasets for desk-scale experiments.
//!
//! Two generators are provided:
//!
//! - [`CountrySkewConfig`]: users and tracks grouped by country. A fixed share
//!   of all interactions goes to tracks of one majority country; users of the
//!   other countries additionally prefer their own country's tracks. Within a
//!   country, track popularity follows a rank power law `rank^-exponent`.
//! - [`BlockConfig`]: a block-structured matrix (user clusters x item
//!   clusters) with separate within-block and cross-block densities.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{k_core, CountryLabel, DataError, DatasetBuilder, InteractionDataset, Provenance};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorConfig {
    CountrySkew(CountrySkewConfig),
    Block(BlockConfig),
}

impl GeneratorConfig {
    pub fn generate(&self, seed: u64) -> Result<InteractionDataset, DataError> {
        match self {
            GeneratorConfig::CountrySkew(c) => generate_country_skew(c, seed),
            GeneratorConfig::Block(c) => generate_block(c, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountrySpec {
    pub code: CountryLabel,
    pub users: usize,
    pub tracks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountrySkewConfig {
    pub countries: Vec<CountrySpec>,
    pub majority_country: CountryLabel,
    /// Share of all interactions that land on majority-country tracks.
    pub majority_share: f64,
    /// For non-majority users: probability that an interaction not spent on
    /// the majority country goes to the user's own country.
    pub local_bias: f64,
    /// Exponent of the within-country rank power law; 0 is uniform.
    pub popularity_exponent: f64,
    pub min_interactions_per_user: usize,
    pub max_interactions_per_user: usize,
    #[serde(default = "default_k_core")]
    pub k_core: usize,
}

/// A user whose preferred buckets are all exhausted stops early after this
/// many consecutive draws from exhausted buckets.
const MAX_BUCKET_MISSES: usize = 10_000;

fn default_k_core() -> usize {
    5
}

impl CountrySkewConfig {
    /// Country sizes from the LFM-2b sample statistics scaled down to 1%
    /// (users and tracks rounded, at least one user per country), with the
    /// US holding 45.5% of interactions.
    pub fn lfm_one_percent() -> Self {
        const ROWS: [(&str, usize, usize); 16] = [
            ("US", 39_614, 1_582),
            ("UK", 15_522, 823),
            ("DE", 6_793, 805),
            ("SE", 4_519, 320),
            ("CA", 3_754, 217),
            ("FR", 2_800, 254),
            ("AU", 2_346, 193),
            ("FI", 2_260, 420),
            ("NO", 1_765, 208),
            ("BR", 2_236, 1_064),
            ("NL", 1_738, 375),
            ("PL", 1_709, 1_040),
            ("RU", 1_888, 1_162),
            ("JP", 1_796, 101),
            ("IT", 1_506, 222),
            ("OTHER", 9_651, 2_990),
        ];
        let countries = ROWS
            .iter()
            .map(|&(code, tracks, users)| CountrySpec {
                code: code.parse().expect("static code"),
                users: ((users as f64 / 100.0).round() as usize).max(1),
                tracks: (tracks as f64 / 100.0).round() as usize,
            })
            .collect();
        Self {
            countries,
            majority_country: CountryLabel::US,
            majority_share: 0.455,
            local_bias: 0.35,
            popularity_exponent: 0.8,
            min_interactions_per_user: 60,
            max_interactions_per_user: 200,
            k_core: 5,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let cfg = |m: String| Err(DataError::Config(m));
        if self.countries.is_empty() {
            return cfg("at least one country is required".into());
        }
        for (name, v) in [
            ("majority_share", self.majority_share),
            ("local_bias", self.local_bias),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return cfg(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !self.popularity_exponent.is_finite() || self.popularity_exponent < 0.0 {
            return cfg(format!(
                "popularity_exponent must be finite and non-negative, got {}",
                self.popularity_exponent
            ));
        }
        if self.min_interactions_per_user == 0
            || self.min_interactions_per_user > self.max_interactions_per_user
        {
            return cfg("need 1 <= min_interactions_per_user <= max_interactions_per_user".into());
        }
        let mut codes: Vec<_> = self.countries.iter().map(|c| c.code).collect();
        codes.sort();
        if codes.windows(2).any(|w| w[0] == w[1]) {
            return cfg("duplicate country in list".into());
        }
        let Some(majority) = self
            .countries
            .iter()
            .find(|c| c.code == self.majority_country)
        else {
            return cfg(format!(
                "majority country {} is not in the country list",
                self.majority_country
            ));
        };
        if majority.tracks == 0 && self.majority_share > 0.0 {
            return cfg("majority country has no tracks".into());
        }
        let minority_tracks: usize = self
            .countries
            .iter()
            .filter(|c| c.code != self.majority_country)
            .map(|c| c.tracks)
            .sum();
        if minority_tracks == 0 && self.majority_share < 1.0 {
            return cfg("majority_share < 1 requires tracks outside the majority country".into());
        }
        if self.countries.iter().map(|c| c.users).sum::<usize>() == 0 {
            return cfg("no users requested".into());
        }
        Ok(())
    }

    fn check_feasible(&self) -> Result<(), DataError> {
        let tracks: usize = self.countries.iter().map(|c| c.tracks).sum();
        let users: usize = self.countries.iter().map(|c| c.users).sum();
        let k = self.k_core;
        if self.max_interactions_per_user > tracks {
            return Err(DataError::Infeasible(format!(
                "users need up to {} distinct tracks but only {tracks} exist",
                self.max_interactions_per_user
            )));
        }
        if k > 1 {
            if self.max_interactions_per_user < k {
                return Err(DataError::Infeasible(format!(
                    "{k}-core needs at least {k} interactions per user, max is {}",
                    self.max_interactions_per_user
                )));
            }
            if users < k {
                return Err(DataError::Infeasible(format!(
                    "{k}-core needs at least {k} users, only {users} requested"
                )));
            }
            let expected =
                users * (self.min_interactions_per_user + self.max_interactions_per_user) / 2;
            if expected < k * tracks {
                return Err(DataError::Infeasible(format!(
                    "about {expected} interactions cannot give {tracks} tracks {k} interactions each"
                )));
            }
        }
        Ok(())
    }
}

/// Weighted sampling without replacement from one country's tracks.
struct Bucket {
    first_track: usize,
    weights: Vec<f64>,
}

impl Bucket {
    fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn generate_country_skew(
    cfg: &CountrySkewConfig,
    seed: u64,
) -> Result<InteractionDataset, DataError> {
    cfg.validate()?;
    cfg.check_feasible()?;
    let mut rng = stream_rng(seed, Stream::Generate, &[]);

    let mut builder = DatasetBuilder::new();
    let mut buckets = Vec::with_capacity(cfg.countries.len());
    let mut track_ids = Vec::new();
    for c in &cfg.countries {
        let first_track = track_ids.len();
        let weights = (1..=c.tracks)
            .map(|r| (r as f64).powf(-cfg.popularity_exponent))
            .collect();
        for _ in 0..c.tracks {
            let id = format!("t{:07}", track_ids.len());
            builder.add_track(&id, c.code)?;
            track_ids.push(id);
        }
        buckets.push(Bucket {
            first_track,
            weights,
        });
    }
    let majority = cfg
        .countries
        .iter()
        .position(|c| c.code == cfg.majority_country)
        .expect("validated");

    let mut user_no = 0usize;
    let mut user_countries = Vec::new();
    let mut user_tracks: Vec<Vec<bool>> = Vec::new();
    for (ci, c) in cfg.countries.iter().enumerate() {
        let is_minority_local = ci != majority && !c.code.is_other() && c.tracks > 0;
        // Non-majority destinations for this user, weighted by track count.
        let others: Vec<(usize, f64)> = cfg
            .countries
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != majority && !(is_minority_local && j == ci))
            .map(|(j, o)| (j, o.tracks as f64))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        for _ in 0..c.users {
            let uid = format!("u{user_no:06}");
            user_no += 1;
            builder.add_user(&uid, c.code)?;
            user_countries.push(c.code);
            let n = rng.gen_range(cfg.min_interactions_per_user..=cfg.max_interactions_per_user);
            let mut remaining: Vec<f64> = buckets.iter().map(Bucket::total).collect();
            let mut left: Vec<usize> = buckets.iter().map(|b| b.weights.len()).collect();
            let mut taken = vec![false; track_ids.len()];
            let mut drawn = 0;
            let mut misses = 0;
            while drawn < n && misses < MAX_BUCKET_MISSES {
                let b = pick_bucket(&mut rng, cfg, majority, ci, is_minority_local, &others);
                if left[b] == 0 {
                    misses += 1;
                    continue;
                }
                let t = draw_without_replacement(&mut rng, &buckets[b], &taken, remaining[b]);
                taken[t] = true;
                left[b] -= 1;
                remaining[b] -= buckets[b].weights[t - buckets[b].first_track];
                if left[b] > 0 && remaining[b] <= 1e-9 * buckets[b].weights[0] {
                    // cancellation drift
                    remaining[b] = recompute(&buckets[b], &taken);
                }
                builder.add_interaction(&uid, &track_ids[t], 1, Provenance::Initial)?;
                drawn += 1;
            }
            user_tracks.push(taken);
        }
    }

    top_up_tracks(&mut rng, cfg, &mut builder, &track_ids, &user_countries, &mut user_tracks)?;
    let ds = builder.build()?;
    let ds = if cfg.k_core > 1 { k_core(&ds, cfg.k_core) } else { ds };
    if ds.is_empty() {
        return Err(DataError::Infeasible(format!(
            "{}-core filtering removed every interaction",
            cfg.k_core
        )));
    }
    Ok(ds)
}

/// Gives every track at least `k_core` listeners so that k-core filtering
/// does not thin out the long tail of small countries. Extra listeners are
/// drawn from the track's own country first, then from everyone.
fn top_up_tracks(
    rng: &mut ChaCha8Rng,
    cfg: &CountrySkewConfig,
    builder: &mut DatasetBuilder,
    track_ids: &[String],
    user_countries: &[CountryLabel],
    user_tracks: &mut [Vec<bool>],
) -> Result<(), DataError> {
    let k = cfg.k_core;
    if k <= 1 || user_tracks.is_empty() {
        return Ok(());
    }
    let mut track_countries = Vec::with_capacity(track_ids.len());
    for c in &cfg.countries {
        track_countries.extend(std::iter::repeat_n(c.code, c.tracks));
    }
    let mut counts = vec![0usize; track_ids.len()];
    for taken in user_tracks.iter() {
        for (t, _) in taken.iter().enumerate().filter(|(_, &x)| x) {
            counts[t] += 1;
        }
    }
    for t in 0..track_ids.len() {
        if counts[t] >= k {
            continue;
        }
        let country = track_countries[t];
        let mut local: Vec<usize> = (0..user_tracks.len())
            .filter(|&u| !user_tracks[u][t] && user_countries[u] == country && !country.is_other())
            .collect();
        let mut rest: Vec<usize> = (0..user_tracks.len())
            .filter(|&u| !user_tracks[u][t] && !(user_countries[u] == country && !country.is_other()))
            .collect();
        local.shuffle(rng);
        rest.shuffle(rng);
        for u in local.into_iter().chain(rest).take(k - counts[t]) {
            user_tracks[u][t] = true;
            builder.add_interaction(&format!("u{u:06}"), &track_ids[t], 1, Provenance::Initial)?;
        }
    }
    Ok(())
}

fn pick_bucket(
    rng: &mut ChaCha8Rng,
    cfg: &CountrySkewConfig,
    majority: usize,
    own: usize,
    local_applies: bool,
    others: &[(usize, f64)],
) -> usize {
    if rng.gen::<f64>() < cfg.majority_share || others.is_empty() && !local_applies {
        return majority;
    }
    if local_applies && (others.is_empty() || rng.gen::<f64>() < cfg.local_bias) {
        return own;
    }
    let total: f64 = others.iter().map(|o| o.1).sum();
    let mut x = rng.gen::<f64>() * total;
    for &(j, w) in others {
        if x < w {
            return j;
        }
        x -= w;
    }
    others.last().map(|o| o.0).unwrap_or(majority)
}

fn recompute(bucket: &Bucket, taken: &[bool]) -> f64 {
    bucket
        .weights
        .iter()
        .enumerate()
        .filter(|(o, _)| !taken[bucket.first_track + o])
        .map(|(_, w)| w)
        .sum()
}

fn draw_without_replacement(
    rng: &mut ChaCha8Rng,
    bucket: &Bucket,
    taken: &[bool],
    remaining: f64,
) -> usize {
    let mut x = rng.gen::<f64>() * remaining;
    let mut last = None;
    for (o, &w) in bucket.weights.iter().enumerate() {
        let t = bucket.first_track + o;
        if taken[t] {
            continue;
        }
        last = Some(t);
        if x < w {
            return t;
        }
        x -= w;
    }
    // Rounding can leave x just above the last weight.
    last.expect("bucket has untaken tracks")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub users: usize,
    pub items: usize,
    pub user_blocks: usize,
    pub item_blocks: usize,
    pub within_density: f64,
    pub cross_density: f64,
    /// Country assigned to block `b` (cycled). Users and items of the same
    /// block share a country.
    pub block_countries: Vec<CountryLabel>,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self {
            users: 200,
            items: 400,
            user_blocks: 2,
            item_blocks: 2,
            within_density: 0.8,
            cross_density: 0.05,
            block_countries: vec![CountryLabel::code("SE").unwrap(), CountryLabel::code("FI").unwrap()],
        }
    }
}

fn generate_block(cfg: &BlockConfig, seed: u64) -> Result<InteractionDataset, DataError> {
    if cfg.users == 0 || cfg.items == 0 || cfg.user_blocks == 0 || cfg.item_blocks == 0 {
        return Err(DataError::Config("block sizes must be positive".into()));
    }
    for (name, v) in [
        ("within_density", cfg.within_density),
        ("cross_density", cfg.cross_density),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(DataError::Config(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    if cfg.block_countries.is_empty() {
        return Err(DataError::Config("block_countries must not be empty".into()));
    }
    let mut rng = stream_rng(seed, Stream::Generate, &[]);
    let user_block = |u: usize| u * cfg.user_blocks / cfg.users;
    let item_block = |i: usize| i * cfg.item_blocks / cfg.items;
    let country = |b: usize| cfg.block_countries[b % cfg.block_countries.len()];

    let mut builder = DatasetBuilder::new();
    let item_ids: Vec<String> = (0..cfg.items).map(|i| format!("i{i:05}")).collect();
    for (i, id) in item_ids.iter().enumerate() {
        builder.add_track(id, country(item_block(i)))?;
    }
    for u in 0..cfg.users {
        let uid = format!("u{u:05}");
        builder.add_user(&uid, country(user_block(u)))?;
        for (i, iid) in item_ids.iter().enumerate() {
            let same = user_block(u) % cfg.item_blocks == item_block(i);
            let p = if same {
                cfg.within_density
            } else {
                cfg.cross_density
            };
            if rng.gen::<f64>() < p {
                builder.add_interaction(&uid, iid, 1, Provenance::Initial)?;
            }
        }
    }
    let ds = builder.build()?;
    if ds.is_empty() {
        return Err(DataError::Infeasible("block densities produced no interactions".into()));
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_country(skew: f64) -> CountrySkewConfig {
        CountrySkewConfig {
            countries: vec![
                CountrySpec {
                    code: CountryLabel::code("AA").unwrap(),
                    users: 300,
                    tracks: 300,
                },
                CountrySpec {
                    code: CountryLabel::code("BB").unwrap(),
                    users: 300,
                    tracks: 300,
                },
            ],
            majority_country: CountryLabel::code("AA").unwrap(),
            majority_share: skew,
            local_bias: 0.5,
            popularity_exponent: 0.8,
            min_interactions_per_user: 80,
            max_interactions_per_user: 120,
            k_core: 5,
        }
    }

    fn share_of(ds: &InteractionDataset, country: CountryLabel) -> f64 {
        let n = ds
            .interactions()
            .iter()
            .filter(|i| ds.track(i.track).country == country)
            .count();
        n as f64 / ds.num_interactions() as f64
    }

    #[test]
    fn symmetric_two_country_shares() {
        let ds = generate_country_skew(&two_country(0.5), 1).unwrap();
        assert!(ds.num_interactions() >= 50_000);
        let a = share_of(&ds, CountryLabel::code("AA").unwrap());
        assert!((a - 0.5).abs() <= 0.02, "share {a}");
    }

    #[test]
    fn majority_share_tracks_config() {
        let ds = generate_country_skew(&two_country(0.7), 2).unwrap();
        let a = share_of(&ds, CountryLabel::code("AA").unwrap());
        assert!((a - 0.7).abs() <= 0.02, "share {a}");
    }

    #[test]
    fn is_five_core_and_deterministic() {
        let cfg = two_country(0.6);
        let a = generate_country_skew(&cfg, 9).unwrap();
        let b = generate_country_skew(&cfg, 9).unwrap();
        assert_eq!(a.interactions(), b.interactions());
        assert!(a.track_interaction_counts().iter().all(|&c| c >= 5));
        assert!(a.user_interaction_counts().iter().all(|&c| c >= 5));
    }

    #[test]
    fn lfm_preset_track_share() {
        let cfg = CountrySkewConfig::lfm_one_percent();
        let ds = generate_country_skew(&cfg, 4).unwrap();
        let us = ds
            .tracks()
            .iter()
            .filter(|t| t.country == CountryLabel::US)
            .count() as f64
            / ds.num_tracks() as f64;
        assert!((us - 0.40).abs() <= 0.02, "US track share {us}");
    }

    #[test]
    fn uniform_popularity_when_exponent_zero() {
        let mut cfg = two_country(0.5);
        cfg.popularity_exponent = 0.0;
        cfg.countries.iter_mut().for_each(|c| c.tracks = 100);
        cfg.min_interactions_per_user = 40;
        cfg.max_interactions_per_user = 40;
        for seed in 0..10 {
            let ds = generate_country_skew(&cfg, seed).unwrap();
            let counts = ds.track_interaction_counts();
            let max = *counts.iter().max().unwrap() as f64;
            let min = *counts.iter().min().unwrap() as f64;
            assert!(max <= 2.0 * min, "seed {seed}: min {min} max {max}");
        }
    }

    #[test]
    fn rejects_invalid_and_infeasible() {
        let mut cfg = two_country(1.5);
        assert!(matches!(
            generate_country_skew(&cfg, 0),
            Err(DataError::Config(_))
        ));
        cfg = two_country(0.5);
        cfg.countries.iter_mut().for_each(|c| c.users = 2);
        cfg.min_interactions_per_user = 5;
        cfg.max_interactions_per_user = 5;
        assert!(matches!(
            generate_country_skew(&cfg, 0),
            Err(DataError::Infeasible(_))
        ));
        cfg = two_country(0.5);
        cfg.max_interactions_per_user = 4;
        cfg.min_interactions_per_user = 4;
        assert!(matches!(
            generate_country_skew(&cfg, 0),
            Err(DataError::Infeasible(_))
        ));
    }

    #[test]
    fn block_structure() {
        let ds = generate_block(&BlockConfig::default(), 0).unwrap();
        assert_eq!(ds.num_users(), 200);
        assert_eq!(ds.num_tracks(), 400);
        let density = ds.num_interactions() as f64 / (200.0 * 400.0);
        assert!((density - 0.425).abs() < 0.02, "density {density}");
    }

    #[test]
    fn generator_config_from_json() {
        let text = r#"{"kind":"block","users":10,"items":20,"user_blocks":2,"item_blocks":2,
            "within_density":0.9,"cross_density":0.1,"block_countries":["SE","OTHER"]}"#;
        let cfg: GeneratorConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(cfg, GeneratorConfig::Block(_)));
    }
}
