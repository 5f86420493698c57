//! Labelling the latent factors of a matrix-factorization recommender with an
//! output-agreement game.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] loads ratings and the item catalog.
//! 2. [`factorization`] trains a biased SGD factor model.
//! 3. [`representatives`] picks the items that best exemplify each factor.
//! 4. [`game`] runs two-player sessions over those items, writing [`log`]
//!    records that [`analysis`] turns into per-factor term descriptions.

pub mod analysis;
pub mod factorization;
pub mod game;
pub mod ingest;
pub mod log;
pub mod representatives;
pub mod study;

pub use analysis::{AnalysisConfig, AnalysisReport};
pub use factorization::{EvalMetrics, FactorModel, TrainingConfig};
pub use game::{GameConfig, GameSession};
pub use ingest::{Catalog, ItemMeta, RatingDataset};
pub use log::{LogRecord, Millis};
pub use representatives::{RepresentativeSet, SelectionConfig};
