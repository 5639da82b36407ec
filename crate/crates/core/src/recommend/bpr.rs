//! Bayesian personalized ranking with matrix factorization.
//!
//! `score(u, i) = <p_u, q_i> + b_i`. For a triple (u, i, j) with i a training
//! positive and j a sampled negative, the loss is
//!
//! ```text
//! L = -ln sigma(x_ui - x_uj) + l2/2 * (|p_u|^2 + |q_i|^2 + |q_j|^2 + b_i^2 + b_j^2)
//! ```
//!
//! and parameters are updated by plain SGD, one triple at a time.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validation_ndcg, FitContext, RecommendError, Recommender};
use crate::data::{UserIdx, UserItemMatrix};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BprConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Negatives sampled per positive.
    pub negatives: usize,
}

impl Default for BprConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            learning_rate: 0.01,
            l2: 1e-4,
            negatives: 1,
        }
    }
}

impl BprConfig {
    fn validate(&self) -> Result<(), RecommendError> {
        if self.dim == 0 || self.negatives == 0 {
            return Err(RecommendError::Config("bpr.dim and bpr.negatives must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(RecommendError::Config("bpr.learning_rate must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(RecommendError::Config("bpr.l2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// Embeddings and item biases, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BprParams {
    pub dim: usize,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
    pub item_bias: Vec<f64>,
}

/// Gradient of the triple loss with respect to the touched parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleGradient {
    pub user: Vec<f64>,
    pub pos_item: Vec<f64>,
    pub neg_item: Vec<f64>,
    pub pos_bias: f64,
    pub neg_bias: f64,
}

/// `-ln sigma(x)` without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl BprParams {
    pub fn zeros(n_users: usize, n_items: usize, dim: usize) -> Self {
        Self {
            dim,
            user_factors: vec![0.0; n_users * dim],
            item_factors: vec![0.0; n_items * dim],
            item_bias: vec![0.0; n_items],
        }
    }

    /// Embeddings uniform in `[-1/sqrt(dim), 1/sqrt(dim)]`, zero biases.
    pub fn random(n_users: usize, n_items: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / (dim as f64).sqrt();
        let mut p = Self::zeros(n_users, n_items, dim);
        for x in p.user_factors.iter_mut().chain(p.item_factors.iter_mut()) {
            *x = rng.gen_range(-scale..=scale);
        }
        p
    }

    pub fn num_users(&self) -> usize {
        self.user_factors.len() / self.dim
    }

    pub fn num_items(&self) -> usize {
        self.item_bias.len()
    }

    pub fn user(&self, u: usize) -> &[f64] {
        &self.user_factors[u * self.dim..(u + 1) * self.dim]
    }

    pub fn item(&self, i: usize) -> &[f64] {
        &self.item_factors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn score(&self, u: usize, i: usize) -> f64 {
        dot(self.user(u), self.item(i)) + self.item_bias[i]
    }

    pub fn triple_loss(&self, u: usize, i: usize, j: usize, l2: f64) -> f64 {
        let x = self.score(u, i) - self.score(u, j);
        let reg = dot(self.user(u), self.user(u))
            + dot(self.item(i), self.item(i))
            + dot(self.item(j), self.item(j))
            + self.item_bias[i].powi(2)
            + self.item_bias[j].powi(2);
        neg_log_sigmoid(x) + 0.5 * l2 * reg
    }

    pub fn triple_gradient(&self, u: usize, i: usize, j: usize, l2: f64) -> TripleGradient {
        let x = self.score(u, i) - self.score(u, j);
        // dL/dx = -sigma(-x)
        let g = -sigmoid(-x);
        let pu = self.user(u);
        let qi = self.item(i);
        let qj = self.item(j);
        TripleGradient {
            user: (0..self.dim)
                .map(|d| g * (qi[d] - qj[d]) + l2 * pu[d])
                .collect(),
            pos_item: (0..self.dim).map(|d| g * pu[d] + l2 * qi[d]).collect(),
            neg_item: (0..self.dim).map(|d| -g * pu[d] + l2 * qj[d]).collect(),
            pos_bias: g + l2 * self.item_bias[i],
            neg_bias: -g + l2 * self.item_bias[j],
        }
    }

    /// One SGD step on a triple; returns the loss before the step.
    pub fn sgd_step(&mut self, u: usize, i: usize, j: usize, lr: f64, l2: f64) -> f64 {
        let loss = self.triple_loss(u, i, j, l2);
        let grad = self.triple_gradient(u, i, j, l2);
        let d = self.dim;
        for k in 0..d {
            self.user_factors[u * d + k] -= lr * grad.user[k];
            self.item_factors[i * d + k] -= lr * grad.pos_item[k];
            self.item_factors[j * d + k] -= lr * grad.neg_item[k];
        }
        self.item_bias[i] -= lr * grad.pos_bias;
        self.item_bias[j] -= lr * grad.neg_bias;
        loss
    }
}

/// Per-epoch training trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BprTrainingReport {
    pub epoch_losses: Vec<f64>,
    pub validation_ndcg: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct BprModel {
    params: BprParams,
    report: BprTrainingReport,
}

impl BprModel {
    pub fn from_params(params: BprParams) -> Self {
        Self {
            params,
            report: BprTrainingReport::default(),
        }
    }

    pub fn params(&self) -> &BprParams {
        &self.params
    }

    pub fn report(&self) -> &BprTrainingReport {
        &self.report
    }

    /// Trains with early stopping on validation NDCG and returns the
    /// parameters of the best validation epoch.
    pub fn fit(
        ctx: &FitContext<'_>,
        config: &BprConfig,
        init: Option<&BprParams>,
    ) -> Result<Self, RecommendError> {
        config.validate()?;
        ctx.training.validate()?;
        let train = ctx.train;
        if train.nnz() == 0 {
            return Err(RecommendError::EmptyTrain);
        }
        let mut rng = stream_rng(ctx.seed, Stream::Fit, &[]);
        let mut params = match init {
            Some(p)
                if p.dim == config.dim
                    && p.num_users() == train.num_users()
                    && p.num_items() == train.num_items() =>
            {
                p.clone()
            }
            _ => BprParams::random(train.num_users(), train.num_items(), config.dim, &mut rng),
        };

        let positives: Vec<(u32, u32)> = train
            .rows()
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().map(move |&i| (u as u32, i)))
            .collect();

        let mut report = BprTrainingReport::default();
        let mut best: Option<(f64, BprParams)> = None;
        let mut since_best = 0;
        let mut order = positives.clone();

        for epoch in 1..=ctx.training.max_epochs {
            order.shuffle(&mut rng);
            let loss = run_epoch(&mut params, train, &order, config, &mut rng);
            if !loss.is_finite() || params.item_bias.iter().any(|b| !b.is_finite()) {
                return Err(RecommendError::TrainingDiverged { epoch });
            }
            report.epoch_losses.push(loss);

            let model = BprModel::from_params(params);
            let ndcg = validation_ndcg(
                &model,
                train,
                ctx.validation,
                ctx.training.eval_k,
                ctx.parallelism,
            )?;
            params = model.params;
            report.validation_ndcg.push(ndcg);

            if best.as_ref().is_none_or(|(b, _)| ndcg > *b) {
                best = Some((ndcg, params.clone()));
                report.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= ctx.training.patience {
                    break;
                }
            }
        }

        let (_, params) = best.expect("at least one epoch ran");
        Ok(Self { params, report })
    }
}

fn run_epoch(
    params: &mut BprParams,
    train: &UserItemMatrix,
    order: &[(u32, u32)],
    config: &BprConfig,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let n_items = train.num_items();
    let mut total = 0.0;
    let mut steps = 0usize;
    for &(u, i) in order {
        let row = train.row(UserIdx(u));
        if row.len() >= n_items {
            continue;
        }
        for _ in 0..config.negatives {
            let j = loop {
                let j = rng.gen_range(0..n_items as u32);
                if row.binary_search(&j).is_err() {
                    break j;
                }
            };
            total += params.sgd_step(
                u as usize,
                i as usize,
                j as usize,
                config.learning_rate,
                config.l2,
            );
            steps += 1;
        }
    }
    if steps == 0 {
        0.0
    } else {
        total / steps as f64
    }
}

impl Recommender for BprModel {
    fn name(&self) -> &str {
        "BPR"
    }

    fn num_items(&self) -> usize {
        self.params.num_items()
    }

    fn score_into(&self, user: UserIdx, out: &mut [f64]) -> Result<(), RecommendError> {
        if user.index() >= self.params.num_users() {
            return Err(RecommendError::UnknownUser(user.0));
        }
        let pu = self.params.user(user.index());
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(pu, self.params.item(i)) + self.params.item_bias[i];
        }
        Ok(())
    }
}
