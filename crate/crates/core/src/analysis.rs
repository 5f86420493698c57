//! Factor descriptions and quality statistics distilled from the event log.
//!
//! Matched terms are counted per factor, filtered by the good-label threshold,
//! and turned into TF-IDF content vectors:
//!
//! ```text
//! weight(t, f) = tf(t, f) * ln(n / df(t))
//! ```
//!
//! where `tf` is the term's match count for the factor, `df` the number of
//! factor descriptions containing it, and `n` the number of factors with at
//! least one surviving term. Factor descriptions are compared by cosine
//! similarity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log::{LogContents, LogRecord};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("every factor description is empty")]
    NoDescriptions,
    #[error("vector dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("good label threshold must be >= 1")]
    InvalidThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub good_label_threshold: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { good_label_threshold: 2 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorTally {
    pub guesses: u64,
    pub matches: u64,
    pub term_matches: BTreeMap<String, u64>,
}

/// Raw per-factor counts folded from a log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    pub factors: Vec<FactorTally>,
    pub total_guesses: u64,
    pub total_matches: u64,
    pub players: BTreeSet<String>,
    pub games: BTreeSet<String>,
    pub corrupt_records: usize,
}

impl Aggregate {
    fn factor_mut(&mut self, factor: usize) -> &mut FactorTally {
        if self.factors.len() <= factor {
            self.factors.resize_with(factor + 1, FactorTally::default);
        }
        &mut self.factors[factor]
    }
}

pub fn aggregate(records: &[LogRecord]) -> Aggregate {
    let mut agg = Aggregate::default();
    for rec in records {
        match rec {
            LogRecord::SessionStart {
                game_id,
                players,
                factor_count,
                ..
            } => {
                agg.games.insert(game_id.clone());
                agg.players.extend(players.iter().cloned());
                if *factor_count > 0 {
                    agg.factor_mut(factor_count - 1);
                }
            }
            LogRecord::Guess(g) => {
                agg.players.insert(g.player_id.clone());
                agg.factor_mut(g.factor_id).guesses += 1;
                agg.total_guesses += 1;
            }
            LogRecord::Match(m) => {
                let tally = agg.factor_mut(m.factor_id);
                tally.matches += 1;
                *tally.term_matches.entry(m.term.clone()).or_insert(0) += 1;
                agg.total_matches += 1;
            }
            _ => {}
        }
    }
    agg
}

pub fn aggregate_log(contents: &LogContents) -> Aggregate {
    let mut agg = aggregate(&contents.records);
    agg.corrupt_records = contents.corrupt;
    agg
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorDescription {
    pub factor_id: usize,
    pub term_counts: BTreeMap<String, u64>,
}

impl FactorDescription {
    pub fn total(&self) -> u64 {
        self.term_counts.values().sum()
    }
}

/// Keeps only (factor, term) pairs with at least `threshold` matches.
pub fn filter_good_labels(agg: &Aggregate, threshold: u64) -> Result<Vec<FactorDescription>, AnalysisError> {
    if threshold == 0 {
        return Err(AnalysisError::InvalidThreshold);
    }
    Ok(agg
        .factors
        .iter()
        .enumerate()
        .map(|(factor_id, tally)| FactorDescription {
            factor_id,
            term_counts: tally
                .term_matches
                .iter()
                .filter(|(_, &c)| c >= threshold)
                .map(|(t, &c)| (t.clone(), c))
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermVectorSpace {
    pub dictionary: Vec<String>,
    pub idf: Vec<f64>,
    /// One vector per description, in input order.
    pub vectors: Vec<Vec<f64>>,
}

pub fn build_vectors(descriptions: &[FactorDescription]) -> Result<TermVectorSpace, AnalysisError> {
    let described = descriptions.iter().filter(|d| !d.term_counts.is_empty()).count();
    if described == 0 {
        return Err(AnalysisError::NoDescriptions);
    }
    let dictionary: Vec<String> = descriptions
        .iter()
        .flat_map(|d| d.term_counts.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let idf: Vec<f64> = dictionary
        .iter()
        .map(|t| {
            let df = descriptions.iter().filter(|d| d.term_counts.contains_key(t)).count();
            (described as f64 / df as f64).ln()
        })
        .collect();
    let vectors = descriptions
        .iter()
        .map(|d| {
            dictionary
                .iter()
                .zip(&idf)
                .map(|(t, w)| d.term_counts.get(t).map_or(0.0, |&tf| tf as f64 * w))
                .collect()
        })
        .collect();
    Ok(TermVectorSpace { dictionary, idf, vectors })
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::DimensionMismatch(a.len(), b.len()));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCount {
    pub term: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorStats {
    pub factor_id: usize,
    pub guesses: u64,
    pub matches: u64,
    pub guess_match_ratio: Option<f64>,
    /// Surviving terms, most matched first.
    pub terms: Vec<TermCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub good_label_threshold: u64,
    pub factors: Vec<FactorStats>,
    pub total_guesses: u64,
    pub total_matches: u64,
    pub player_count: usize,
    pub game_count: usize,
    pub surviving_matches: u64,
    pub distinct_terms: usize,
    pub expected_contribution_guesses: Option<f64>,
    pub expected_contribution_matches: Option<f64>,
    pub similarity: Vec<Vec<f64>>,
    pub mean_similarity: Option<f64>,
    pub sd_similarity: Option<f64>,
    pub corrupt_records: usize,
}

impl AnalysisReport {
    pub fn factor(&self, factor_id: usize) -> Option<&FactorStats> {
        self.factors.get(factor_id)
    }

    /// Off-diagonal similarity entries `(i, j, sim)` with `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.similarity.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.similarity[i][j]))
            .collect()
    }
}

pub fn report(records: &[LogRecord], cfg: &AnalysisConfig) -> Result<AnalysisReport, AnalysisError> {
    report_from_aggregate(&aggregate(records), cfg)
}

pub fn report_from_log(contents: &LogContents, cfg: &AnalysisConfig) -> Result<AnalysisReport, AnalysisError> {
    report_from_aggregate(&aggregate_log(contents), cfg)
}

pub fn report_from_aggregate(agg: &Aggregate, cfg: &AnalysisConfig) -> Result<AnalysisReport, AnalysisError> {
    let descriptions = filter_good_labels(agg, cfg.good_label_threshold)?;
    let k = descriptions.len();

    let similarity = match build_vectors(&descriptions) {
        Ok(space) => (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| cosine(&space.vectors[i], &space.vectors[j]).expect("shared dictionary"))
                    .collect()
            })
            .collect(),
        Err(AnalysisError::NoDescriptions) => vec![vec![0.0; k]; k],
        Err(e) => return Err(e),
    };

    let off_diag: Vec<f64> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .map(|(i, j)| similarity[i][j])
        .collect();
    let mean_similarity = (!off_diag.is_empty()).then(|| off_diag.iter().sum::<f64>() / off_diag.len() as f64);
    let sd_similarity = mean_similarity.filter(|_| off_diag.len() > 1).map(|m| {
        (off_diag.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (off_diag.len() - 1) as f64).sqrt()
    });

    let factors = agg
        .factors
        .iter()
        .zip(&descriptions)
        .enumerate()
        .map(|(factor_id, (tally, desc))| {
            let mut terms: Vec<TermCount> = desc
                .term_counts
                .iter()
                .map(|(t, &c)| TermCount {
                    term: t.clone(),
                    count: c,
                })
                .collect();
            terms.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.term.cmp(&b.term)));
            FactorStats {
                factor_id,
                guesses: tally.guesses,
                matches: tally.matches,
                guess_match_ratio: (tally.matches > 0).then(|| tally.guesses as f64 / tally.matches as f64),
                terms,
            }
        })
        .collect();

    let players = agg.players.len();
    let per_player = |total: u64| (players > 0).then(|| total as f64 / players as f64);
    Ok(AnalysisReport {
        good_label_threshold: cfg.good_label_threshold,
        factors,
        total_guesses: agg.total_guesses,
        total_matches: agg.total_matches,
        player_count: players,
        game_count: agg.games.len(),
        surviving_matches: descriptions.iter().map(FactorDescription::total).sum(),
        distinct_terms: descriptions
            .iter()
            .flat_map(|d| d.term_counts.keys())
            .collect::<BTreeSet<_>>()
            .len(),
        expected_contribution_guesses: per_player(agg.total_guesses),
        expected_contribution_matches: per_player(agg.total_matches),
        similarity,
        mean_similarity,
        sd_similarity,
        corrupt_records: agg.corrupt_records,
    })
}
