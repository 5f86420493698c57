//! Per-factor representative items.
//!
//! For factor `f`, the candidate pool is every item whose raw value in column
//! `f` reaches the column's `candidate_quantile`. Each pooled item gets three
//! components, min-max normalised over the pool:
//!
//! * popularity `ln(1 + rating_count)`
//! * relevance, the raw factor value
//! * specificity, the factor value minus the mean absolute value of the other factors
//!
//! and the weighted sum `s_if` ranks the pool. The top `set_size` items are the
//! factor's representatives.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factorization::FactorModel;
use crate::ingest::RatingDataset;

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("factor {factor} out of range (model has {k} factors)")]
    FactorOutOfRange { factor: usize, k: usize },
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub weight_popularity: f64,
    pub weight_relevance: f64,
    pub weight_specificity: f64,
    pub candidate_quantile: f64,
    pub set_size: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            weight_popularity: 0.4,
            weight_relevance: 0.3,
            weight_specificity: 0.3,
            candidate_quantile: 0.75,
            set_size: 25,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        let w = [self.weight_popularity, self.weight_relevance, self.weight_specificity];
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(SelectionError::InvalidConfig("weights must be non-negative".into()));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(SelectionError::InvalidConfig("weights must sum to 1".into()));
        }
        if !(self.candidate_quantile > 0.0 && self.candidate_quantile < 1.0) {
            return Err(SelectionError::InvalidConfig("candidate_quantile must lie in (0, 1)".into()));
        }
        if self.set_size == 0 {
            return Err(SelectionError::InvalidConfig("set_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn score(&self, c: &Components) -> f64 {
        self.weight_popularity * c.popularity + self.weight_relevance * c.relevance + self.weight_specificity * c.specificity
    }
}

/// Normalised score components of one pooled item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    /// Internal item index.
    pub item: u32,
    pub popularity: f64,
    pub relevance: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeEntry {
    pub item_id: u64,
    pub popularity: f64,
    pub relevance: f64,
    pub specificity: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRepresentatives {
    pub factor: usize,
    /// Raw factor value an item needs to enter the pool.
    pub threshold: f64,
    pub pool_size: usize,
    /// Set when the pool held fewer items than `set_size`.
    pub undersized: bool,
    pub entries: Vec<RepresentativeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    pub factors: Vec<FactorRepresentatives>,
}

impl RepresentativeSet {
    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn items(&self, factor: usize) -> &[RepresentativeEntry] {
        self.factors.get(factor).map_or(&[], |f| f.entries.as_slice())
    }

    /// Tab-separated export, one line per (factor, rank).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("factor\trank\titem_id\tscore\tpop_norm\trel_norm\tspec_norm\n");
        for f in &self.factors {
            for (rank, e) in f.entries.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                    f.factor,
                    rank + 1,
                    e.item_id,
                    e.score,
                    e.popularity,
                    e.relevance,
                    e.specificity
                );
            }
        }
        out
    }
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn pool_with_threshold(model: &FactorModel, factor: usize, q: f64) -> Result<(Vec<u32>, f64), SelectionError> {
    if factor >= model.k() {
        return Err(SelectionError::FactorOutOfRange { factor, k: model.k() });
    }
    let column = model.item_column(factor);
    let Some(threshold) = quantile(&column, q) else {
        return Ok((Vec::new(), f64::NAN));
    };
    let pool = column
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= threshold)
        .map(|(i, _)| i as u32)
        .collect();
    Ok((pool, threshold))
}

/// Internal ids of the items at or above the `q` quantile of factor `factor`.
pub fn candidate_pool(model: &FactorModel, factor: usize, q: f64) -> Result<Vec<u32>, SelectionError> {
    pool_with_threshold(model, factor, q).map(|(pool, _)| pool)
}

/// Raw specificity: own factor value minus the mean absolute off-factor value.
pub fn raw_specificity(model: &FactorModel, item: u32, factor: usize) -> f64 {
    let row = model.item_vector(item);
    let own = row[factor];
    if row.len() < 2 {
        return own;
    }
    let off: f64 = row.iter().enumerate().filter(|(g, _)| *g != factor).map(|(_, v)| v.abs()).sum();
    own - off / (row.len() - 1) as f64
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![1.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / span).collect()
}

/// Normalised components for every item in `pool`, in pool order.
pub fn compute_components(model: &FactorModel, ds: &RatingDataset, factor: usize, pool: &[u32]) -> Vec<Components> {
    let pop: Vec<f64> = pool
        .iter()
        .map(|&i| {
            let count = model.items().external(i).map_or(0, |ext| ds.rating_count_external(ext));
            (1.0 + count as f64).ln()
        })
        .collect();
    let rel: Vec<f64> = pool.iter().map(|&i| model.item_factor(i, factor)).collect();
    let spec: Vec<f64> = pool.iter().map(|&i| raw_specificity(model, i, factor)).collect();
    let (pop, rel, spec) = (min_max(&pop), min_max(&rel), min_max(&spec));
    pool.iter()
        .enumerate()
        .map(|(n, &item)| Components {
            item,
            popularity: pop[n],
            relevance: rel[n],
            specificity: spec[n],
        })
        .collect()
}

pub fn select_factor(
    model: &FactorModel,
    ds: &RatingDataset,
    factor: usize,
    cfg: &SelectionConfig,
) -> Result<FactorRepresentatives, SelectionError> {
    let (pool, threshold) = pool_with_threshold(model, factor, cfg.candidate_quantile)?;
    let mut entries: Vec<RepresentativeEntry> = compute_components(model, ds, factor, &pool)
        .iter()
        .map(|c| RepresentativeEntry {
            item_id: model.items().external(c.item).expect("pooled item in id map"),
            popularity: c.popularity,
            relevance: c.relevance,
            specificity: c.specificity,
            score: cfg.score(c),
        })
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.item_id.cmp(&b.item_id))
    });
    entries.truncate(cfg.set_size);
    Ok(FactorRepresentatives {
        factor,
        threshold,
        pool_size: pool.len(),
        undersized: pool.len() < cfg.set_size,
        entries,
    })
}

pub fn select_representatives(
    model: &FactorModel,
    ds: &RatingDataset,
    cfg: &SelectionConfig,
) -> Result<RepresentativeSet, SelectionError> {
    cfg.validate()?;
    let factors = (0..model.k())
        .map(|f| select_factor(model, ds, f, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RepresentativeSet { factors })
}
