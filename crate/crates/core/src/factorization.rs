//! Biased latent factor model trained by stochastic gradient descent.
//!
//! The predictor is `mu + b_u + b_i + p_u . q_i`. Training minimises the
//! squared error with L2 regularisation on factors and biases; every observed
//! rating contributes the pointwise loss
//!
//! ```text
//! L = 1/2 e^2 + lambda/2 (|p_u|^2 + |q_i|^2 + b_u^2 + b_i^2),   e = r - prediction
//! ```
//!
//! and each SGD step moves all four parameter groups against its gradient,
//! computed from the pre-step values.
//!
//! # Model file layout
//!
//! All integers and floats are little-endian.
//!
//! | field             | type              |
//! |-------------------|-------------------|
//! | magic             | `b"LFGM"`         |
//! | version           | u32 (= 1)         |
//! | k                 | u32               |
//! | user_count        | u32               |
//! | item_count        | u32               |
//! | global mean       | f64               |
//! | user external ids | u64 x user_count  |
//! | item external ids | u64 x item_count  |
//! | user biases       | f64 x user_count  |
//! | item biases       | f64 x item_count  |
//! | user factors      | f64 x user_count*k, row-major |
//! | item factors      | f64 x item_count*k, row-major |

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{IdMap, RatingDataset};

pub const MODEL_MAGIC: &[u8; 4] = b"LFGM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite value at epoch {epoch} (learning rate {learning_rate}); try a lower learning rate")]
    Diverged { epoch: usize, learning_rate: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelFormatError {
    #[error("not a model file")]
    BadMagic,
    #[error("unsupported model version {0}")]
    VersionMismatch(u32),
    #[error("payload truncated")]
    Truncated,
    #[error("{0} trailing bytes after model payload")]
    TrailingBytes(usize),
    #[error("duplicate external id in model id map")]
    DuplicateId,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("test set is empty")]
    EmptyTestSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub factors: usize,
    pub reg_lambda: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            factors: 10,
            reg_lambda: 0.001,
            iterations: 16,
            learning_rate: 0.01,
            lr_decay: 0.9,
            init_scale: 0.1,
            seed: 42,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.to_string()));
        if self.factors == 0 {
            return bad("factors must be >= 1");
        }
        if !(self.reg_lambda >= 0.0) || !self.reg_lambda.is_finite() {
            return bad("reg_lambda must be a finite value >= 0");
        }
        if self.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be > 0");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if !(self.init_scale > 0.0) || !self.init_scale.is_finite() {
            return bad("init_scale must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    k: usize,
    global_mean: f64,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    users: IdMap,
    items: IdMap,
}

impl FactorModel {
    /// A model with zero biases and factors.
    pub fn zeros(k: usize, global_mean: f64, users: IdMap, items: IdMap) -> Self {
        Self {
            k,
            global_mean,
            user_bias: vec![0.0; users.len()],
            item_bias: vec![0.0; items.len()],
            user_factors: vec![0.0; users.len() * k],
            item_factors: vec![0.0; items.len() * k],
            users,
            items,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn users(&self) -> &IdMap {
        &self.users
    }

    pub fn items(&self) -> &IdMap {
        &self.items
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn user_vector(&self, user: u32) -> &[f64] {
        let u = user as usize * self.k;
        &self.user_factors[u..u + self.k]
    }

    pub fn item_vector(&self, item: u32) -> &[f64] {
        let i = item as usize * self.k;
        &self.item_factors[i..i + self.k]
    }

    pub fn user_vector_mut(&mut self, user: u32) -> &mut [f64] {
        let u = user as usize * self.k;
        &mut self.user_factors[u..u + self.k]
    }

    pub fn item_vector_mut(&mut self, item: u32) -> &mut [f64] {
        let i = item as usize * self.k;
        &mut self.item_factors[i..i + self.k]
    }

    pub fn user_bias(&self, user: u32) -> f64 {
        self.user_bias[user as usize]
    }

    pub fn item_bias(&self, item: u32) -> f64 {
        self.item_bias[item as usize]
    }

    pub fn set_user_bias(&mut self, user: u32, value: f64) {
        self.user_bias[user as usize] = value;
    }

    pub fn set_item_bias(&mut self, item: u32, value: f64) {
        self.item_bias[item as usize] = value;
    }

    /// Value of factor `factor` for internal item `item`.
    pub fn item_factor(&self, item: u32, factor: usize) -> f64 {
        self.item_factors[item as usize * self.k + factor]
    }

    /// Column `factor` of the item matrix, indexed by internal item id.
    pub fn item_column(&self, factor: usize) -> Vec<f64> {
        (0..self.item_count()).map(|i| self.item_factors[i * self.k + factor]).collect()
    }

    /// Predicts a rating from internal ids; `None` marks an unknown user or item.
    pub fn predict(&self, user: Option<u32>, item: Option<u32>) -> f64 {
        let mut score = self.global_mean;
        if let Some(u) = user {
            score += self.user_bias(u);
        }
        if let Some(i) = item {
            score += self.item_bias(i);
        }
        if let (Some(u), Some(i)) = (user, item) {
            score += dot(self.user_vector(u), self.item_vector(i));
        }
        score
    }

    pub fn predict_external(&self, user_id: u64, item_id: u64) -> f64 {
        self.predict(self.users.internal(user_id), self.items.internal(item_id))
    }

    fn prediction_error(&self, user: u32, item: u32, rating: f64) -> f64 {
        rating - self.predict(Some(user), Some(item))
    }

    /// Pointwise regularised loss for one observed rating.
    pub fn pointwise_loss(&self, user: u32, item: u32, rating: f64, lambda: f64) -> f64 {
        let e = self.prediction_error(user, item, rating);
        let reg = sq_norm(self.user_vector(user))
            + sq_norm(self.item_vector(item))
            + self.user_bias(user).powi(2)
            + self.item_bias(item).powi(2);
        0.5 * e * e + 0.5 * lambda * reg
    }

    /// Applies one SGD update for rating `(user, item, rating)` with step size
    /// `lr`. Both factor vectors are updated from their pre-step values.
    /// Returns the pre-step prediction error.
    pub fn sgd_step(&mut self, user: u32, item: u32, rating: f64, lambda: f64, lr: f64) -> f64 {
        let e = self.prediction_error(user, item, rating);
        let k = self.k;
        let (u0, i0) = (user as usize * k, item as usize * k);
        for f in 0..k {
            let p = self.user_factors[u0 + f];
            let q = self.item_factors[i0 + f];
            self.user_factors[u0 + f] = p + lr * (e * q - lambda * p);
            self.item_factors[i0 + f] = q + lr * (e * p - lambda * q);
        }
        let bu = &mut self.user_bias[user as usize];
        *bu += lr * (e - lambda * *bu);
        let bi = &mut self.item_bias[item as usize];
        *bi += lr * (e - lambda * *bi);
        e
    }

    /// Training objective: sum of pointwise losses over `ds`.
    pub fn objective(&self, ds: &RatingDataset, lambda: f64) -> f64 {
        ds.triples()
            .iter()
            .map(|t| self.pointwise_loss(t.user, t.item, t.rating, lambda))
            .sum()
    }

    fn all_finite(&self) -> bool {
        self.global_mean.is_finite()
            && self
                .user_bias
                .iter()
                .chain(&self.item_bias)
                .chain(&self.user_factors)
                .chain(&self.item_factors)
                .all(|v| v.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n_floats = self.user_bias.len() + self.item_bias.len() + self.user_factors.len() + self.item_factors.len();
        let mut out = Vec::with_capacity(28 + 8 * (self.users.len() + self.items.len() + n_floats));
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.k as u32).to_le_bytes());
        out.extend_from_slice(&(self.users.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.items.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.global_mean.to_le_bytes());
        for id in self.users.externals().iter().chain(self.items.externals()) {
            out.extend_from_slice(&id.to_le_bytes());
        }
        for v in self
            .user_bias
            .iter()
            .chain(&self.item_bias)
            .chain(&self.user_factors)
            .chain(&self.item_factors)
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelFormatError> {
        let mut r = ByteReader { buf: bytes };
        if r.take(4)? != MODEL_MAGIC {
            return Err(ModelFormatError::BadMagic);
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(ModelFormatError::VersionMismatch(version));
        }
        let k = r.u32()? as usize;
        let n_users = r.u32()? as usize;
        let n_items = r.u32()? as usize;
        let global_mean = r.f64()?;
        let user_ids = (0..n_users).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
        let item_ids = (0..n_items).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
        let user_bias = r.f64s(n_users)?;
        let item_bias = r.f64s(n_items)?;
        let user_factors = r.f64s(n_users * k)?;
        let item_factors = r.f64s(n_items * k)?;
        if !r.buf.is_empty() {
            return Err(ModelFormatError::TrailingBytes(r.buf.len()));
        }
        Ok(Self {
            k,
            global_mean,
            user_bias,
            item_bias,
            user_factors,
            item_factors,
            users: IdMap::from_externals(user_ids).ok_or(ModelFormatError::DuplicateId)?,
            items: IdMap::from_externals(item_ids).ok_or(ModelFormatError::DuplicateId)?,
        })
    }
}

/// Reads the `k` field out of a serialized model header.
pub fn header_factor_count(bytes: &[u8]) -> Result<u32, ModelFormatError> {
    let mut r = ByteReader { buf: bytes };
    if r.take(4)? != MODEL_MAGIC {
        return Err(ModelFormatError::BadMagic);
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(ModelFormatError::VersionMismatch(version));
    }
    r.u32()
}

struct ByteReader<'a> {
    buf: &'a [u8],
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelFormatError> {
        if self.buf.len() < n {
            return Err(ModelFormatError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, ModelFormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelFormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ModelFormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ModelFormatError> {
        let bytes = self.take(n.checked_mul(8).ok_or(ModelFormatError::Truncated)?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn train(ds: &RatingDataset, cfg: &TrainingConfig) -> Result<FactorModel, TrainError> {
    train_with_history(ds, cfg).map(|(model, _)| model)
}

/// Trains a model and returns the training objective measured after each epoch.
pub fn train_with_history(ds: &RatingDataset, cfg: &TrainingConfig) -> Result<(FactorModel, Vec<f64>), TrainError> {
    cfg.validate()?;
    let global_mean = ds.mean_rating().ok_or(TrainError::EmptyDataset)?;
    let mut model = FactorModel::zeros(cfg.factors, global_mean, ds.users().clone(), ds.items().clone());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = cfg.init_scale / (cfg.factors as f64).sqrt();
    for v in model.user_factors.iter_mut().chain(model.item_factors.iter_mut()) {
        *v = rng.random_range(-bound..=bound);
    }

    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut lr = cfg.learning_rate;
    let mut history = Vec::with_capacity(cfg.iterations);
    for epoch in 0..cfg.iterations {
        order.shuffle(&mut rng);
        for &idx in &order {
            let t = ds.triples()[idx];
            let e = model.sgd_step(t.user, t.item, t.rating, cfg.reg_lambda, lr);
            if !e.is_finite() {
                return Err(TrainError::Diverged { epoch, learning_rate: lr });
            }
        }
        if !model.all_finite() {
            return Err(TrainError::Diverged { epoch, learning_rate: lr });
        }
        history.push(model.objective(ds, cfg.reg_lambda));
        lr *= cfg.lr_decay;
    }
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub rmse: f64,
    /// Absent when no test user has at least two held-out items.
    pub ndcg_at_10: Option<f64>,
}

pub fn evaluate(model: &FactorModel, test: &RatingDataset, cutoff: usize) -> Result<EvalMetrics, EvalError> {
    evaluate_with(test, cutoff, |user_id, item_id| model.predict_external(user_id, item_id))
}

/// Evaluates an arbitrary predictor over external ids.
///
/// NDCG ranks each user's held-out items by predicted score (ties by item id),
/// with gain equal to the rating and discount `log2(rank + 1)`.
pub fn evaluate_with<F>(test: &RatingDataset, cutoff: usize, predict: F) -> Result<EvalMetrics, EvalError>
where
    F: Fn(u64, u64) -> f64,
{
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let mut sq_err = 0.0;
    let mut per_user: HashMap<u32, Vec<(u64, f64, f64)>> = HashMap::new();
    for t in test.triples() {
        let user_id = test.users().external(t.user).expect("user id in map");
        let item_id = test.items().external(t.item).expect("item id in map");
        let pred = predict(user_id, item_id);
        sq_err += (t.rating - pred).powi(2);
        per_user.entry(t.user).or_default().push((item_id, t.rating, pred));
    }
    let rmse = (sq_err / test.len() as f64).sqrt();

    let mut users: Vec<_> = per_user.into_iter().filter(|(_, v)| v.len() >= 2).collect();
    users.sort_by_key(|(u, _)| *u);
    let ndcg = if users.is_empty() {
        None
    } else {
        let total: f64 = users.iter().map(|(_, items)| user_ndcg(items, cutoff)).sum();
        Some(total / users.len() as f64)
    };
    Ok(EvalMetrics { rmse, ndcg_at_10: ndcg })
}

fn user_ndcg(items: &[(u64, f64, f64)], cutoff: usize) -> f64 {
    let mut by_pred = items.to_vec();
    by_pred.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    let gains: Vec<f64> = by_pred.iter().map(|x| x.1).collect();
    let mut ideal = gains.clone();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let idcg = dcg(&ideal, cutoff);
    if idcg <= 0.0 {
        return 1.0;
    }
    dcg(&gains, cutoff) / idcg
}

/// Discounted cumulative gain of a ranked gain list, truncated at `cutoff`.
pub fn dcg(gains: &[f64], cutoff: usize) -> f64 {
    gains
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(rank0, g)| g / ((rank0 + 2) as f64).log2())
        .sum()
}
