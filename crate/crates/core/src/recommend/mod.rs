//! Recommender contract and implementations.
//!
//! Every model is fitted on a training [`UserItemMatrix`] and then scores all
//! items for a user. [`recommend_top_k`] turns those scores into a ranked
//! list that never contains an item from the user's seen-set.

mod bpr;
mod fixture;
mod itemknn;
mod pop;
mod topk;

pub use bpr::{BprConfig, BprModel, BprParams, BprTrainingReport, TripleGradient};
pub use fixture::FixtureModel;
pub use itemknn::{ItemKnnConfig, ItemKnnModel};
pub use pop::PopModel;
pub use topk::{recommend_top_k, top_k_from_scores, RecommendationList, ScoredItem};

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{InteractionDataset, TrackIdx, UserIdx, UserItemMatrix};
use crate::metrics::ndcg_at_k;
use crate::par::{map_range, Parallelism};

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error("unknown user index {0}")]
    UnknownUser(u32),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("training set is empty")]
    EmptyTrain,
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    TrainingDiverged { epoch: usize },
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("fixture scores line {line}: {message}")]
    Fixture { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A fitted model. Scoring is read-only, so one fitted model can serve many
/// threads at once.
pub trait Recommender: Send + Sync {
    fn name(&self) -> &str;

    fn num_items(&self) -> usize;

    /// Writes one score per item into `out` (`out.len() == num_items()`).
    fn score_into(&self, user: UserIdx, out: &mut [f64]) -> Result<(), RecommendError>;

    fn scores(&self, user: UserIdx) -> Result<Vec<f64>, RecommendError> {
        let mut out = vec![0.0; self.num_items()];
        self.score_into(user, &mut out)?;
        Ok(out)
    }
}

/// Early-stopping and evaluation settings shared by iterative models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Cut-off of the validation NDCG used for model selection.
    pub eval_k: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            patience: 5,
            eval_k: 10,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), RecommendError> {
        if self.max_epochs == 0 || self.patience == 0 || self.eval_k == 0 {
            return Err(RecommendError::Config(
                "max_epochs, patience and eval_k must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which model to run in the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ModelConfig {
    Pop,
    #[serde(rename = "itemknn")]
    ItemKnn(ItemKnnConfig),
    Bpr(BprConfig),
    /// Scores read from a `user_id<TAB>track_id<TAB>score` file.
    Fixture { path: PathBuf },
}

impl ModelConfig {
    pub fn label(&self) -> &'static str {
        match self {
            ModelConfig::Pop => "Pop",
            ModelConfig::ItemKnn(_) => "ItemKNN",
            ModelConfig::Bpr(_) => "BPR",
            ModelConfig::Fixture { .. } => "Fixture",
        }
    }

    /// Parses a model name with default hyperparameters.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "pop" => Some(ModelConfig::Pop),
            "itemknn" => Some(ModelConfig::ItemKnn(ItemKnnConfig::default())),
            "bpr" => Some(ModelConfig::Bpr(BprConfig::default())),
            _ => None,
        }
    }
}

/// Inputs to a fit.
pub struct FitContext<'a> {
    pub dataset: &'a InteractionDataset,
    pub train: &'a UserItemMatrix,
    pub validation: &'a UserItemMatrix,
    pub training: &'a TrainingConfig,
    pub seed: u64,
    pub parallelism: Parallelism,
}

/// Any of the built-in fitted models.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Pop(PopModel),
    ItemKnn(ItemKnnModel),
    Bpr(BprModel),
    Fixture(Arc<FixtureModel>),
}

impl FittedModel {
    /// Fits a fresh model. `warm_start` seeds BPR with earlier parameters and
    /// is ignored by the other models.
    pub fn fit(
        config: &ModelConfig,
        ctx: &FitContext<'_>,
        warm_start: Option<&FittedModel>,
    ) -> Result<Self, RecommendError> {
        if ctx.train.nnz() == 0 {
            return Err(RecommendError::EmptyTrain);
        }
        Ok(match config {
            ModelConfig::Pop => FittedModel::Pop(PopModel::fit(ctx.train)?),
            ModelConfig::ItemKnn(c) => {
                FittedModel::ItemKnn(ItemKnnModel::fit(ctx.train, c, ctx.parallelism)?)
            }
            ModelConfig::Bpr(c) => {
                let init = match warm_start {
                    Some(FittedModel::Bpr(m)) => Some(m.params()),
                    _ => None,
                };
                FittedModel::Bpr(BprModel::fit(ctx, c, init)?)
            }
            ModelConfig::Fixture { path } => match warm_start {
                Some(FittedModel::Fixture(m)) => FittedModel::Fixture(Arc::clone(m)),
                _ => FittedModel::Fixture(Arc::new(FixtureModel::load(path, ctx.dataset)?)),
            },
        })
    }

    pub fn as_recommender(&self) -> &dyn Recommender {
        match self {
            FittedModel::Pop(m) => m,
            FittedModel::ItemKnn(m) => m,
            FittedModel::Bpr(m) => m,
            FittedModel::Fixture(m) => m.as_ref(),
        }
    }
}

/// Mean NDCG@k over users with validation items. Items the user has in
/// `train` are excluded from the ranking.
pub fn validation_ndcg(
    model: &dyn Recommender,
    train: &UserItemMatrix,
    validation: &UserItemMatrix,
    k: usize,
    parallelism: Parallelism,
) -> Result<f64, RecommendError> {
    let per_user = map_range(parallelism, validation.num_users(), |u| {
        let user = UserIdx(u as u32);
        let relevant = validation.row(user);
        if relevant.is_empty() {
            return Ok(None);
        }
        let seen: Vec<TrackIdx> = train.row(user).iter().map(|&i| TrackIdx(i)).collect();
        let rec = recommend_top_k(model, user, k, &seen)?;
        let relevant: Vec<TrackIdx> = relevant.iter().map(|&i| TrackIdx(i)).collect();
        Ok(Some(ndcg_at_k(&rec.tracks(), &relevant, k)))
    });
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in per_user {
        if let Some(x) = v? {
            sum += x;
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}
