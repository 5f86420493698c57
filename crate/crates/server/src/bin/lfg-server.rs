use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::Parser;
use tracing_subscriber::EnvFilter;

use lfg_core::analysis::AnalysisConfig;
use lfg_core::factorization::TrainingConfig;
use lfg_core::game::GameConfig;
use lfg_core::representatives::SelectionConfig;
use lfg_server::{run_pipeline, AppState, Hub, PipelineConfig, SystemClock};
use lfg_server::store::EventStore;

#[derive(Parser)]
#[command(about = "Run the latent factor labelling game")]
struct Args {
    /// Ratings CSV (userId,movieId,rating[,timestamp]).
    #[arg(long)]
    ratings: PathBuf,
    /// Item catalog, one JSON object per line.
    #[arg(long)]
    catalog: PathBuf,
    /// Latent dimensionality k.
    #[arg(long, default_value_t = 10)]
    factors: usize,
    #[arg(long, default_value_t = 0.001)]
    lambda: f64,
    #[arg(long, default_value_t = 16)]
    iterations: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    /// Seed for training, item sampling and factor choice.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Representatives kept per factor.
    #[arg(long, default_value_t = 25)]
    set_size: usize,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Append-only event log.
    #[arg(long, default_value = "events.jsonl")]
    log: PathBuf,
    #[arg(long, default_value_t = 180)]
    game_seconds: u64,
    #[arg(long, default_value_t = 3)]
    items_per_round: usize,
    #[arg(long, default_value_t = 100)]
    match_points: i64,
    #[arg(long, default_value_t = -20, allow_negative_numbers = true)]
    skip_penalty: i64,
    /// Good-label threshold used by the factor description endpoint.
    #[arg(long, default_value_t = 2)]
    threshold: u64,
    /// Also write the selected representatives as TSV.
    #[arg(long)]
    reps_out: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let pipeline = PipelineConfig {
        ratings_path: args.ratings.clone(),
        catalog_path: args.catalog.clone(),
        training: TrainingConfig {
            factors: args.factors,
            reg_lambda: args.lambda,
            iterations: args.iterations,
            learning_rate: args.learning_rate,
            seed: args.seed,
            ..TrainingConfig::default()
        },
        selection: SelectionConfig {
            set_size: args.set_size,
            ..SelectionConfig::default()
        },
    };
    let started = std::time::Instant::now();
    let snapshot = {
        let cfg = pipeline.clone();
        tokio::task::spawn_blocking(move || run_pipeline(&cfg, 1)).await??
    };
    tracing::info!(
        factors = snapshot.factor_count(),
        train_rmse = snapshot.train_metrics.map(|m| m.rmse),
        elapsed_ms = started.elapsed().as_millis() as u64,
        "content ready"
    );
    if let Some(path) = &args.reps_out {
        std::fs::write(path, snapshot.representatives.to_tsv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let game = GameConfig {
        duration_s: args.game_seconds,
        items_per_round: args.items_per_round,
        match_points: args.match_points,
        skip_penalty_points: args.skip_penalty,
        seed: args.seed,
    };
    let store = EventStore::open(&args.log).with_context(|| format!("opening {}", args.log.display()))?;
    let hub = Hub::new(game, store, snapshot)?;
    let state = AppState::new(
        hub,
        Arc::new(SystemClock),
        Some(pipeline),
        AnalysisConfig { good_label_threshold: args.threshold },
    );
    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    tokio::select! {
        r = lfg_server::serve(listener, state, Duration::from_millis(250)) => r?,
        _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
    }
    Ok(())
}
