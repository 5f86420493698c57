//! Live side of the latent factor game: pairs players, runs sessions over
//! WebSockets, appends every event to a JSONL log and serves the leaderboard
//! and factor descriptions over HTTP.

pub mod app;
pub mod clock;
pub mod hub;
pub mod leaderboard;
pub mod pipeline;
pub mod protocol;
pub mod store;

pub use app::{router, serve, AppState};
pub use clock::{Clock, ManualClock, SystemClock};
pub use hub::{ConnId, Hub, Outbox};
pub use pipeline::{run_pipeline, PipelineConfig, Snapshot};
