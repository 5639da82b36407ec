use serde::{Deserialize, Serialize};

use super::{RecommendError, Recommender};
use crate::data::{UserIdx, UserItemMatrix};
use crate::par::{map_range, Parallelism};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItemKnnConfig {
    /// Neighbors kept per item.
    pub neighbors: usize,
    /// Added to the cosine denominator.
    pub shrinkage: f64,
}

impl Default for ItemKnnConfig {
    fn default() -> Self {
        Self {
            neighbors: 100,
            shrinkage: 0.0,
        }
    }
}

/// Item-based nearest neighbours over binarized item-user vectors.
///
/// `score(u, i) = sum of sim(i, j) over neighbours j of i that u interacted
/// with in training`.
#[derive(Debug, Clone)]
pub struct ItemKnnModel {
    train: Vec<Vec<u32>>,
    // neighbors[i] = top-N (j, sim(i, j)), best first
    neighbors: Vec<Vec<(u32, f64)>>,
    // reverse[j] = (i, sim(i, j)) for every i having j as a neighbour
    reverse: Vec<Vec<(u32, f64)>>,
}

/// Cosine similarity with shrinkage from a co-occurrence count and the two
/// item supports. Zero-support items are similar to nothing.
pub(crate) fn shrunk_cosine(co: u32, support_i: u32, support_j: u32, shrinkage: f64) -> f64 {
    if co == 0 || support_i == 0 || support_j == 0 {
        return 0.0;
    }
    let denom = f64::from(support_i).sqrt() * f64::from(support_j).sqrt() + shrinkage;
    f64::from(co) / denom
}

impl ItemKnnModel {
    pub fn fit(
        train: &UserItemMatrix,
        config: &ItemKnnConfig,
        parallelism: Parallelism,
    ) -> Result<Self, RecommendError> {
        if config.neighbors == 0 {
            return Err(RecommendError::Config("itemknn.neighbors must be >= 1".into()));
        }
        if !config.shrinkage.is_finite() || config.shrinkage < 0.0 {
            return Err(RecommendError::Config(
                "itemknn.shrinkage must be finite and non-negative".into(),
            ));
        }
        if train.nnz() == 0 {
            return Err(RecommendError::EmptyTrain);
        }
        let n_items = train.num_items();
        let item_users = train.item_users();
        let rows = train.rows();
        let support: Vec<u32> = item_users.iter().map(|c| c.len() as u32).collect();

        let neighbors = map_range(parallelism, n_items, |i| {
            let mut co = vec![0u32; n_items];
            let mut touched = Vec::new();
            for &u in &item_users[i] {
                for &j in &rows[u as usize] {
                    if j as usize != i {
                        if co[j as usize] == 0 {
                            touched.push(j);
                        }
                        co[j as usize] += 1;
                    }
                }
            }
            let mut sims: Vec<(u32, f64)> = touched
                .into_iter()
                .map(|j| {
                    let s = shrunk_cosine(co[j as usize], support[i], support[j as usize], config.shrinkage);
                    (j, s)
                })
                .filter(|&(_, s)| s > 0.0)
                .collect();
            sims.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            sims.truncate(config.neighbors);
            sims
        });

        let mut reverse = vec![Vec::new(); n_items];
        for (i, list) in neighbors.iter().enumerate() {
            for &(j, s) in list {
                reverse[j as usize].push((i as u32, s));
            }
        }

        Ok(Self {
            train: rows.to_vec(),
            neighbors,
            reverse,
        })
    }

    /// Kept neighbours of item `i`, most similar first.
    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.neighbors[i]
    }
}

impl Recommender for ItemKnnModel {
    fn name(&self) -> &str {
        "ItemKNN"
    }

    fn num_items(&self) -> usize {
        self.neighbors.len()
    }

    fn score_into(&self, user: UserIdx, out: &mut [f64]) -> Result<(), RecommendError> {
        let row = self
            .train
            .get(user.index())
            .ok_or(RecommendError::UnknownUser(user.0))?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for &j in row {
            for &(i, s) in &self.reverse[j as usize] {
                out[i as usize] += s;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint_supports() {
        // items 0 and 1 share users {0,1}; item 2 only user 2
        let m = UserItemMatrix::from_rows(3, vec![vec![0, 1], vec![0, 1], vec![2]]);
        let knn = ItemKnnModel::fit(&m, &ItemKnnConfig::default(), Parallelism::Sequential).unwrap();
        let n = knn.neighbors(0);
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].0, 1);
        assert!((n[0].1 - 1.0).abs() < 1e-12);
        assert!(knn.neighbors(2).is_empty());
        assert_eq!(shrunk_cosine(0, 4, 4, 0.0), 0.0);
        assert_eq!(shrunk_cosine(3, 0, 4, 0.0), 0.0);
    }

    #[test]
    fn unknown_user_is_an_error() {
        let m = UserItemMatrix::from_rows(2, vec![vec![0, 1]]);
        let knn = ItemKnnModel::fit(&m, &ItemKnnConfig::default(), Parallelism::Sequential).unwrap();
        assert!(matches!(
            knn.scores(UserIdx(5)),
            Err(RecommendError::UnknownUser(5))
        ));
    }

    #[test]
    fn truncation_keeps_best() {
        let m = UserItemMatrix::from_rows(
            4,
            vec![vec![0, 1, 2], vec![0, 1], vec![0, 3], vec![1, 2]],
        );
        let cfg = ItemKnnConfig {
            neighbors: 1,
            shrinkage: 0.0,
        };
        let knn = ItemKnnModel::fit(&m, &cfg, Parallelism::Parallel).unwrap();
        assert_eq!(knn.neighbors(0).len(), 1);
        assert_eq!(knn.neighbors(0)[0].0, 1);
    }
}
