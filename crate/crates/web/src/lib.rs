//! WebAssembly bindings for the static demo page in `www/`. Every export
//! returns JSON text so the page needs no generated type definitions.

use std::sync::Arc;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use lfg_core::analysis::{report, AnalysisConfig};
use lfg_core::factorization::{train, TrainingConfig};
use lfg_core::game::{GameConfig, GameSession, GuessOutcome, RoundOutcome, SkipOutcome};
use lfg_core::ingest::{RatingDataset, RatingScale};
use lfg_core::representatives::{select_representatives, RepresentativeSet, SelectionConfig};
use lfg_core::study::study_log;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Factor descriptions of the bundled study log at a good-label threshold.
#[wasm_bindgen]
pub fn analyze_study(threshold: u32) -> Result<String, JsValue> {
    let rep = report(&study_log(), &AnalysisConfig { good_label_threshold: threshold as u64 }).map_err(js_err)?;
    serde_json::to_string(&rep).map_err(js_err)
}

/// Two taste groups over 40 items; items `1000..1020` lean one way.
fn demo_ratings() -> RatingDataset {
    let mut rows = Vec::new();
    for u in 0..60u64 {
        for i in 0..40u64 {
            if (u * 11 + i * 7) % 4 == 0 {
                continue;
            }
            let likes = (u % 3 == 0) == (i < 20);
            let r = if likes { 4.5 } else { 2.0 } + ((u * i) % 3) as f64 * 0.5 - 0.5;
            rows.push((u, 1000 + i, r, None));
        }
    }
    RatingDataset::from_external(rows, RatingScale::MOVIELENS)
}

fn demo_representatives(cfg: &SelectionConfig) -> Result<RepresentativeSet, JsValue> {
    let ds = demo_ratings();
    let model = train(
        &ds,
        &TrainingConfig {
            factors: 3,
            iterations: 40,
            learning_rate: 0.02,
            ..TrainingConfig::default()
        },
    )
    .map_err(js_err)?;
    select_representatives(&model, &ds, cfg).map_err(js_err)
}

/// Representatives of a small synthetic model under the given weights.
#[wasm_bindgen]
pub fn explore_representatives(
    weight_popularity: f64,
    weight_relevance: f64,
    weight_specificity: f64,
    candidate_quantile: f64,
    set_size: u32,
) -> Result<String, JsValue> {
    let cfg = SelectionConfig {
        weight_popularity,
        weight_relevance,
        weight_specificity,
        candidate_quantile,
        set_size: set_size as usize,
    };
    serde_json::to_string(&demo_representatives(&cfg)?).map_err(js_err)
}

/// Both players at one keyboard; the page passes `Date.now()` as `now`.
#[wasm_bindgen]
pub struct HotSeatGame {
    session: GameSession,
}

#[wasm_bindgen]
impl HotSeatGame {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, duration_s: u32, now: f64) -> Result<HotSeatGame, JsValue> {
        let reps = demo_representatives(&SelectionConfig::default())?;
        let cfg = GameConfig {
            duration_s: duration_s as u64,
            seed: seed as u64,
            ..GameConfig::default()
        };
        let session = GameSession::create("demo", "left", "right", Arc::new(reps), cfg, now as u64).map_err(js_err)?;
        Ok(Self { session })
    }

    /// `player` is 0 or 1. Returns `{result, term?}` with result one of
    /// recorded, matched, duplicate, empty.
    pub fn guess(&mut self, player: u32, term: &str, now: f64) -> Result<String, JsValue> {
        let round = self.round_id()?;
        let name = self.player(player)?;
        let out = match self.session.submit_guess(&name, round, term, now as u64).map_err(js_err)? {
            GuessOutcome::Recorded(t) => json!({"result": "recorded", "term": t}),
            GuessOutcome::Matched(t) => json!({"result": "matched", "term": t}),
            GuessOutcome::RejectedDuplicate => json!({"result": "duplicate"}),
            GuessOutcome::RejectedEmpty => json!({"result": "empty"}),
        };
        Ok(out.to_string())
    }

    pub fn skip(&mut self, player: u32, now: f64) -> Result<String, JsValue> {
        let round = self.round_id()?;
        let name = self.player(player)?;
        let out = match self.session.request_skip(&name, round, now as u64).map_err(js_err)? {
            SkipOutcome::Pending => "pending",
            SkipOutcome::Skipped => "skipped",
        };
        Ok(json!({ "result": out }).to_string())
    }

    /// Ends the game once time is up; safe to call on every animation frame.
    pub fn tick(&mut self, now: f64) -> bool {
        !self.session.tick(now as u64).is_empty()
    }

    /// Current score, round, item ids and each side's guesses.
    pub fn state(&self) -> String {
        let round: Value = match self.session.current_round() {
            Some(r) => json!({
                "round_id": r.round_id,
                "item_ids": r.item_ids,
                "guess_counts": [r.guesses[0].len(), r.guesses[1].len()],
                "skip_votes": r.skip_votes,
            }),
            None => Value::Null,
        };
        let history: Vec<Value> = self
            .session
            .rounds()
            .iter()
            .filter_map(|r| match &r.outcome {
                RoundOutcome::Matched(t) => Some(json!({"round_id": r.round_id, "outcome": "match", "term": t})),
                RoundOutcome::Skipped => Some(json!({"round_id": r.round_id, "outcome": "skipped"})),
                RoundOutcome::Expired => Some(json!({"round_id": r.round_id, "outcome": "expired"})),
                RoundOutcome::Open => None,
            })
            .collect();
        json!({
            "points": self.session.points(),
            "matches": self.session.match_count(),
            "ends_at": self.session.ends_at(),
            "finished": self.session.finish_reason().is_some(),
            "round": round,
            "history": history,
        })
        .to_string()
    }
}

impl HotSeatGame {
    fn round_id(&self) -> Result<u32, JsValue> {
        self.session.current_round().map(|r| r.round_id).ok_or_else(|| js_err("the game is over"))
    }

    fn player(&self, player: u32) -> Result<String, JsValue> {
        self.session
            .players()
            .get(player as usize)
            .cloned()
            .ok_or_else(|| js_err(format!("no player {player}")))
    }
}
