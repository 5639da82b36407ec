use super::{RecommendError, Recommender};
use crate::data::{UserIdx, UserItemMatrix};

/// Scores every item by its number of training interactions.
#[derive(Debug, Clone)]
pub struct PopModel {
    counts: Vec<u32>,
}

impl PopModel {
    pub fn fit(train: &UserItemMatrix) -> Result<Self, RecommendError> {
        if train.nnz() == 0 {
            return Err(RecommendError::EmptyTrain);
        }
        Ok(Self {
            counts: train.item_counts(),
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

impl Recommender for PopModel {
    fn name(&self) -> &str {
        "Pop"
    }

    fn num_items(&self) -> usize {
        self.counts.len()
    }

    // Pop serves any user, known or not.
    fn score_into(&self, _user: UserIdx, out: &mut [f64]) -> Result<(), RecommendError> {
        for (o, &c) in out.iter_mut().zip(&self.counts) {
            *o = f64::from(c);
        }
        Ok(())
    }
}
