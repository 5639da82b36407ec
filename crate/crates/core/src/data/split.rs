use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, InteractionDataset, UserItemMatrix};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.75,
            validation: 0.20,
            test: 0.05,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), DataError> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(DataError::Config(format!(
                "split ratios must be non-negative, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::Config(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        if self.train <= 0.0 {
            return Err(DataError::Config("train ratio must be positive".into()));
        }
        Ok(())
    }
}

/// Disjoint sets of interaction indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    pub fn train_matrix(&self, ds: &InteractionDataset) -> UserItemMatrix {
        UserItemMatrix::from_indices(ds, &self.train)
    }

    pub fn validation_matrix(&self, ds: &InteractionDataset) -> UserItemMatrix {
        UserItemMatrix::from_indices(ds, &self.validation)
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Uniform random split of the interactions.
///
/// After the raw draw, every user left without a training interaction gets
/// one of their held-out interactions (chosen uniformly) moved into train.
pub fn random_split(
    ds: &InteractionDataset,
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetSplit, DataError> {
    ratios.validate()?;
    let n = ds.num_interactions();
    if n == 0 {
        return Err(DataError::Config("cannot split an empty dataset".into()));
    }
    let mut rng = stream_rng(seed, Stream::Split, &[]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let n_train = ((ratios.train * n as f64).round() as usize).min(n);
    let n_val = ((ratios.validation * n as f64).round() as usize).min(n - n_train);

    // 0 = train, 1 = validation, 2 = test
    let mut part = vec![2u8; n];
    for (pos, &i) in order.iter().enumerate() {
        part[i] = if pos < n_train {
            0
        } else if pos < n_train + n_val {
            1
        } else {
            2
        };
    }

    let interactions = ds.interactions();
    let mut has_train = vec![false; ds.num_users()];
    let mut held_out: Vec<Vec<usize>> = vec![Vec::new(); ds.num_users()];
    for (i, it) in interactions.iter().enumerate() {
        if part[i] == 0 {
            has_train[it.user.index()] = true;
        } else {
            held_out[it.user.index()].push(i);
        }
    }
    for (u, candidates) in held_out.iter().enumerate() {
        if !has_train[u] && !candidates.is_empty() {
            let pick = candidates[rng.gen_range(0..candidates.len())];
            part[pick] = 0;
        }
    }

    let mut split = DatasetSplit {
        train: Vec::with_capacity(n_train),
        validation: Vec::with_capacity(n_val),
        test: Vec::new(),
    };
    for (i, p) in part.into_iter().enumerate() {
        match p {
            0 => split.train.push(i),
            1 => split.validation.push(i),
            _ => split.test.push(i),
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CountryLabel, DatasetBuilder, Provenance};

    fn grid(users: usize, items: usize) -> InteractionDataset {
        let mut b = DatasetBuilder::new();
        for u in 0..users {
            let uid = format!("u{u:03}");
            b.add_user(&uid, CountryLabel::US).unwrap();
            for t in 0..items {
                let tid = format!("t{t:03}");
                b.add_track(&tid, CountryLabel::US).unwrap();
                b.add_interaction(&uid, &tid, 1, Provenance::Initial).unwrap();
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn hundred_interactions_split_75_20_5() {
        let ds = grid(10, 10);
        let s = random_split(&ds, SplitRatios::default(), 3).unwrap();
        assert_eq!(s.train.len(), 75);
        assert_eq!(s.validation.len(), 20);
        assert_eq!(s.test.len(), 5);
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = grid(10, 10);
        let a = random_split(&ds, SplitRatios::default(), 11).unwrap();
        let b = random_split(&ds, SplitRatios::default(), 11).unwrap();
        assert_eq!(a, b);
        let c = random_split(&ds, SplitRatios::default(), 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_interaction_user_lands_in_train() {
        let mut b = DatasetBuilder::new();
        b.add_user("lonely", CountryLabel::US).unwrap();
        b.add_track("t0", CountryLabel::US).unwrap();
        b.add_interaction("lonely", "t0", 1, Provenance::Initial).unwrap();
        for u in 0..20 {
            let uid = format!("u{u:02}");
            b.add_user(&uid, CountryLabel::US).unwrap();
            for t in 0..5 {
                let tid = format!("t{t}");
                b.add_track(&tid, CountryLabel::US).unwrap();
                b.add_interaction(&uid, &tid, 1, Provenance::Initial).unwrap();
            }
        }
        let ds = b.build().unwrap();
        let lonely = ds.user_index("lonely").unwrap();
        for seed in 0..50 {
            let s = random_split(&ds, SplitRatios::default(), seed).unwrap();
            let m = s.train_matrix(&ds);
            assert_eq!(m.row(lonely).len(), 1, "seed {seed}");
            for u in ds.user_ids() {
                assert!(!m.row(u).is_empty());
            }
        }
    }

    #[test]
    fn ratios_must_sum_to_one() {
        let ds = grid(2, 2);
        let bad = SplitRatios {
            train: 0.7,
            validation: 0.2,
            test: 0.2,
        };
        assert!(matches!(
            random_split(&ds, bad, 0),
            Err(DataError::Config(_))
        ));
    }
}
