//! Offline half of the system: ratings and catalog in, representative sets out.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use lfg_core::factorization::{evaluate, train, EvalMetrics, TrainError, TrainingConfig};
use lfg_core::ingest::{load_catalog, load_ratings, Catalog, IngestError, RatingFormat};
use lfg_core::representatives::{select_representatives, RepresentativeSet, SelectionConfig, SelectionError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("ratings: {0}")]
    Ratings(IngestError),
    #[error("catalog: {0}")]
    Catalog(IngestError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("representative item {item_id} of factor {factor} is missing from the catalog")]
    MissingCatalogItem { factor: usize, item_id: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub ratings_path: PathBuf,
    pub catalog_path: PathBuf,
    pub training: TrainingConfig,
    pub selection: SelectionConfig,
}

/// Optional overrides accepted by the admin endpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineRequest {
    pub ratings_path: Option<PathBuf>,
    pub catalog_path: Option<PathBuf>,
    pub factors: Option<usize>,
    pub reg_lambda: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub set_size: Option<usize>,
}

impl PipelineConfig {
    pub fn with_overrides(&self, req: &PipelineRequest) -> Self {
        let mut cfg = self.clone();
        if let Some(p) = &req.ratings_path {
            cfg.ratings_path = p.clone();
        }
        if let Some(p) = &req.catalog_path {
            cfg.catalog_path = p.clone();
        }
        if let Some(k) = req.factors {
            cfg.training.factors = k;
        }
        if let Some(l) = req.reg_lambda {
            cfg.training.reg_lambda = l;
        }
        if let Some(n) = req.iterations {
            cfg.training.iterations = n;
        }
        if let Some(s) = req.seed {
            cfg.training.seed = s;
        }
        if let Some(n) = req.set_size {
            cfg.selection.set_size = n;
        }
        cfg
    }
}

/// Everything a new game needs, swapped in atomically.
#[derive(Debug)]
pub struct Snapshot {
    pub version: u64,
    pub representatives: Arc<RepresentativeSet>,
    pub catalog: Arc<Catalog>,
    pub train_metrics: Option<EvalMetrics>,
    pub warnings: usize,
}

impl Snapshot {
    pub fn new(version: u64, representatives: RepresentativeSet, catalog: Catalog) -> Self {
        Self {
            version,
            representatives: Arc::new(representatives),
            catalog: Arc::new(catalog),
            train_metrics: None,
            warnings: 0,
        }
    }

    pub fn factor_count(&self) -> usize {
        self.representatives.factor_count()
    }
}

/// Ingest, train and select. Nothing is published unless every step succeeds
/// and every selected item can be shown to players.
pub fn run_pipeline(cfg: &PipelineConfig, version: u64) -> Result<Snapshot, PipelineError> {
    let ratings = load_ratings(&cfg.ratings_path, RatingFormat::MovielensCsv).map_err(PipelineError::Ratings)?;
    let catalog = load_catalog(&cfg.catalog_path).map_err(PipelineError::Catalog)?;
    for w in ratings.warnings.iter().chain(&catalog.warnings) {
        tracing::warn!(line = w.line, "{}", w.message);
    }
    let warnings = ratings.warnings.len() + catalog.warnings.len();
    let ds = ratings.value;
    let mut catalog = catalog.value;
    catalog.attach_rating_counts(&ds);

    let model = train(&ds, &cfg.training)?;
    let metrics = evaluate(&model, &ds, 10).ok();
    let reps = select_representatives(&model, &ds, &cfg.selection)?;
    for f in &reps.factors {
        if let Some(e) = f.entries.iter().find(|e| !catalog.contains(e.item_id)) {
            return Err(PipelineError::MissingCatalogItem {
                factor: f.factor,
                item_id: e.item_id,
            });
        }
    }
    let mut snap = Snapshot::new(version, reps, catalog);
    snap.train_metrics = metrics;
    snap.warnings = warnings;
    Ok(snap)
}
