//! HTTP and WebSocket transport around the [`Hub`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::mpsc::{unbounded_channel, UnboundedSender};

use lfg_core::analysis::{report_from_log, AnalysisConfig};

use crate::clock::Clock;
use crate::hub::{ConnId, Hub, Outbox};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineRequest};
use crate::protocol::ServerMessage;

pub struct AppState {
    hub: Mutex<Hub>,
    clock: Arc<dyn Clock>,
    senders: Mutex<HashMap<ConnId, UnboundedSender<ServerMessage>>>,
    pipeline: Option<PipelineConfig>,
    /// Serialises admin pipeline runs.
    pipeline_lock: tokio::sync::Mutex<()>,
    analysis: AnalysisConfig,
}

impl AppState {
    pub fn new(hub: Hub, clock: Arc<dyn Clock>, pipeline: Option<PipelineConfig>, analysis: AnalysisConfig) -> Arc<Self> {
        Arc::new(Self {
            hub: Mutex::new(hub),
            clock,
            senders: Mutex::new(HashMap::new()),
            pipeline,
            pipeline_lock: tokio::sync::Mutex::new(()),
            analysis,
        })
    }

    pub fn hub(&self) -> std::sync::MutexGuard<'_, Hub> {
        self.hub.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Runs `f` against the hub and delivers its output while still holding the
    /// hub lock, so every connection sees messages in hub order.
    fn with_hub(&self, f: impl FnOnce(&mut Hub, u64) -> Outbox) {
        let mut hub = self.hub();
        let out = f(&mut hub, self.clock.now());
        let senders = self.senders.lock().unwrap_or_else(|e| e.into_inner());
        for (conn, msg) in out {
            if let Some(tx) = senders.get(&conn) {
                let _ = tx.send(msg);
            }
        }
    }

    pub fn tick(&self) {
        self.with_hub(|hub, now| hub.tick(now));
    }

    fn connect(&self, tx: UnboundedSender<ServerMessage>) -> ConnId {
        let mut hub = self.hub();
        let conn = hub.connect();
        self.senders.lock().unwrap_or_else(|e| e.into_inner()).insert(conn, tx);
        conn
    }

    fn disconnect(&self, conn: ConnId) {
        self.with_hub(|hub, now| hub.disconnect(conn, now));
        self.senders.lock().unwrap_or_else(|e| e.into_inner()).remove(&conn);
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/ws", get(ws_handler))
        .route("/health", get(health))
        .route("/leaderboard", get(leaderboard))
        .route("/factors/{id}/description", get(factor_description))
        .route("/admin/pipeline", post(admin_pipeline))
        .with_state(state)
}

/// Serves until the listener fails, ending games on `tick_every`.
pub async fn serve(listener: TcpListener, state: Arc<AppState>, tick_every: Duration) -> std::io::Result<()> {
    let ticker = state.clone();
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(tick_every);
        loop {
            interval.tick().await;
            ticker.tick();
        }
    });
    axum::serve(listener, router(state)).await
}

async fn ws_handler(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    ws.on_upgrade(move |socket| client_loop(state, socket))
}

async fn client_loop(state: Arc<AppState>, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = unbounded_channel::<ServerMessage>();
    let conn = state.connect(tx);
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let text = serde_json::to_string(&msg).expect("server messages serialise");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            // a frame may also carry several newline-delimited messages
            Message::Text(text) => {
                for line in text.as_str().lines().filter(|l| !l.trim().is_empty()) {
                    state.with_hub(|hub, now| hub.route_message(conn, line, now));
                }
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    state.disconnect(conn);
    let _ = writer.await;
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let hub = state.hub();
    let snap = hub.snapshot();
    Json(json!({
        "status": "ok",
        "content_version": snap.version,
        "factors": snap.factor_count(),
        "active_games": hub.active_games(),
        "queued": hub.queue_len(),
    }))
}

#[derive(Deserialize)]
struct TopQuery {
    top: Option<usize>,
}

async fn leaderboard(State(state): State<Arc<AppState>>, Query(q): Query<TopQuery>) -> Response {
    Json(state.hub().leaderboard(q.top.unwrap_or(10))).into_response()
}

async fn factor_description(State(state): State<Arc<AppState>>, Path(id): Path<usize>) -> Response {
    let (contents, factor_count) = {
        let hub = state.hub();
        (hub.store().read_all(), hub.snapshot().factor_count())
    };
    let contents = match contents {
        Ok(c) => c,
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": e.to_string()}))).into_response(),
    };
    let report = match report_from_log(&contents, &state.analysis) {
        Ok(r) => r,
        Err(e) => return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": e.to_string()}))).into_response(),
    };
    match report.factor(id) {
        Some(stats) => Json(json!({
            "factor": stats,
            "similarity": report.similarity.get(id),
            "good_label_threshold": report.good_label_threshold,
        }))
        .into_response(),
        None if id < factor_count => Json(json!({
            "factor": {"factor_id": id, "guesses": 0, "matches": 0, "guess_match_ratio": null, "terms": []},
            "similarity": null,
            "good_label_threshold": report.good_label_threshold,
        }))
        .into_response(),
        None => (StatusCode::NOT_FOUND, Json(json!({"error": format!("no factor {id}")}))).into_response(),
    }
}

async fn admin_pipeline(State(state): State<Arc<AppState>>, body: Option<Json<PipelineRequest>>) -> Response {
    let Some(base) = state.pipeline.clone() else {
        return (StatusCode::CONFLICT, Json(json!({"status": "error", "message": "server started without a pipeline"})))
            .into_response();
    };
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let cfg = base.with_overrides(&req);
    let _guard = state.pipeline_lock.lock().await;
    let version = state.hub().snapshot().version + 1;
    let result = tokio::task::spawn_blocking(move || run_pipeline(&cfg, version)).await;
    match result {
        Ok(Ok(snap)) => {
            let factors = snap.factor_count();
            state.hub().install_snapshot(snap);
            Json(json!({"status": "ok", "content_version": version, "factors": factors})).into_response()
        }
        Ok(Err(e)) => {
            tracing::warn!("pipeline run failed, keeping previous content: {e}");
            (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({"status": "error", "message": e.to_string()}))).into_response()
        }
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"status": "error", "message": e.to_string()})))
            .into_response(),
    }
}
