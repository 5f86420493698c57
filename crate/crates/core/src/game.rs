//! Two-player output-agreement game session.
//!
//! A session is a deterministic state machine. Time never comes from a clock:
//! every transition takes `now` in milliseconds. Each round shows a few
//! representatives of one factor; the round closes when one player enters a
//! term the partner already entered, or when both players vote to skip. The
//! game ends when [`GameSession::tick`] observes `now >= ends_at`.

use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log::{FinishReason, GuessEvent, LogRecord, MatchRecord, Millis, RoundEndKind};
use crate::representatives::RepresentativeSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("a player cannot be paired with themselves")]
    SamePlayer,
    #[error("representative set has no items")]
    EmptyRepresentatives,
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("session is finished")]
    SessionFinished,
    #[error("session is still active")]
    StillActive,
    #[error("game time is up")]
    TimeUp,
    #[error("a round is still open")]
    RoundStillOpen,
    #[error("round {0} is not open")]
    RoundClosed(u32),
    #[error("player {0:?} is not part of this session")]
    UnknownPlayer(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub duration_s: u64,
    pub items_per_round: usize,
    pub match_points: i64,
    /// Added on a mutual skip; negative.
    pub skip_penalty_points: i64,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            duration_s: 180,
            items_per_round: 3,
            match_points: 100,
            skip_penalty_points: -20,
            seed: 0,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.duration_s == 0 {
            return Err(GameError::InvalidConfig("duration_s must be > 0".into()));
        }
        if self.items_per_round == 0 {
            return Err(GameError::InvalidConfig("items_per_round must be >= 1".into()));
        }
        Ok(())
    }
}

/// Lowercases, trims and collapses internal whitespace. `None` if nothing is left.
pub fn normalize_term(raw: &str) -> Option<String> {
    let term = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    (!term.is_empty()).then_some(term)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundOutcome {
    Open,
    Matched(String),
    Skipped,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundState {
    pub round_id: u32,
    pub factor_id: usize,
    pub item_ids: Vec<u64>,
    pub guesses: [Vec<String>; 2],
    pub skip_votes: [bool; 2],
    pub outcome: RoundOutcome,
    pub started_at: Millis,
}

impl RoundState {
    pub fn is_open(&self) -> bool {
        self.outcome == RoundOutcome::Open
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    Active,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuessOutcome {
    Recorded(String),
    Matched(String),
    RejectedDuplicate,
    RejectedEmpty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipOutcome {
    Pending,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub points: i64,
    pub match_count: u32,
    pub skip_count: u32,
    pub rounds_played: u32,
}

#[derive(Debug, Clone)]
pub struct GameSession {
    game_id: String,
    players: [String; 2],
    started_at: Millis,
    ends_at: Millis,
    rounds: Vec<RoundState>,
    points: i64,
    match_count: u32,
    skip_count: u32,
    status: SessionStatus,
    finish_reason: Option<FinishReason>,
    cfg: GameConfig,
    reps: Arc<RepresentativeSet>,
    rng: ChaCha8Rng,
    log: Vec<LogRecord>,
    drained: usize,
}

impl GameSession {
    /// Starts a session and its first round.
    pub fn create(
        game_id: impl Into<String>,
        p1: impl Into<String>,
        p2: impl Into<String>,
        reps: Arc<RepresentativeSet>,
        cfg: GameConfig,
        now: Millis,
    ) -> Result<Self, GameError> {
        cfg.validate()?;
        let (p1, p2) = (p1.into(), p2.into());
        if p1 == p2 {
            return Err(GameError::SamePlayer);
        }
        if reps.factors.iter().all(|f| f.entries.is_empty()) {
            return Err(GameError::EmptyRepresentatives);
        }
        let game_id = game_id.into();
        let ends_at = now + cfg.duration_s * 1000;
        let mut session = Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            log: vec![LogRecord::SessionStart {
                game_id: game_id.clone(),
                players: [p1.clone(), p2.clone()],
                factor_count: reps.factor_count(),
                started_at: now,
                ends_at,
            }],
            game_id,
            players: [p1, p2],
            started_at: now,
            ends_at,
            rounds: Vec::new(),
            points: 0,
            match_count: 0,
            skip_count: 0,
            status: SessionStatus::Active,
            finish_reason: None,
            cfg,
            reps,
            drained: 0,
        };
        session.start_round(now)?;
        Ok(session)
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn players(&self) -> &[String; 2] {
        &self.players
    }

    pub fn started_at(&self) -> Millis {
        self.started_at
    }

    pub fn ends_at(&self) -> Millis {
        self.ends_at
    }

    pub fn points(&self) -> i64 {
        self.points
    }

    pub fn match_count(&self) -> u32 {
        self.match_count
    }

    pub fn skip_count(&self) -> u32 {
        self.skip_count
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn finish_reason(&self) -> Option<FinishReason> {
        self.finish_reason
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn representatives(&self) -> &Arc<RepresentativeSet> {
        &self.reps
    }

    pub fn rounds(&self) -> &[RoundState] {
        &self.rounds
    }

    pub fn current_round(&self) -> Option<&RoundState> {
        self.rounds.last().filter(|r| r.is_open())
    }

    pub fn player_index(&self, player: &str) -> Option<usize> {
        self.players.iter().position(|p| p == player)
    }

    /// Full event history of this session.
    pub fn events(&self) -> &[LogRecord] {
        &self.log
    }

    /// Events appended since the previous call.
    pub fn take_events(&mut self) -> Vec<LogRecord> {
        let new = self.log[self.drained..].to_vec();
        self.drained = self.log.len();
        new
    }

    fn ensure_active(&self, now: Millis) -> Result<(), GameError> {
        if self.status == SessionStatus::Finished {
            return Err(GameError::SessionFinished);
        }
        if now >= self.ends_at {
            return Err(GameError::TimeUp);
        }
        Ok(())
    }

    /// Opens the next round on a factor drawn uniformly from the factors that
    /// have representatives, excluding the previous round's factor when
    /// another choice exists.
    pub fn start_round(&mut self, now: Millis) -> Result<&RoundState, GameError> {
        if self.status == SessionStatus::Finished {
            return Err(GameError::SessionFinished);
        }
        if self.current_round().is_some() {
            return Err(GameError::RoundStillOpen);
        }
        let previous = self.rounds.last().map(|r| r.factor_id);
        let eligible: Vec<usize> = self
            .reps
            .factors
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.entries.is_empty())
            .map(|(i, _)| i)
            .collect();
        let candidates: Vec<usize> = match previous {
            Some(prev) if eligible.len() > 1 => eligible.into_iter().filter(|&f| f != prev).collect(),
            _ => eligible,
        };
        let factor_id = candidates[self.rng.random_range(0..candidates.len())];
        let entries = self.reps.items(factor_id);
        let amount = self.cfg.items_per_round.min(entries.len());
        let item_ids: Vec<u64> = index::sample(&mut self.rng, entries.len(), amount)
            .into_iter()
            .map(|i| entries[i].item_id)
            .collect();
        let round_id = self.rounds.len() as u32;
        self.log.push(LogRecord::RoundStart {
            game_id: self.game_id.clone(),
            round_id,
            factor_id,
            item_ids: item_ids.clone(),
            timestamp: now,
        });
        self.rounds.push(RoundState {
            round_id,
            factor_id,
            item_ids,
            guesses: [Vec::new(), Vec::new()],
            skip_votes: [false, false],
            outcome: RoundOutcome::Open,
            started_at: now,
        });
        Ok(self.rounds.last().unwrap())
    }

    fn open_round_index(&self, player: &str, round_id: u32) -> Result<usize, GameError> {
        let idx = self
            .player_index(player)
            .ok_or_else(|| GameError::UnknownPlayer(player.to_string()))?;
        match self.current_round() {
            Some(r) if r.round_id == round_id => Ok(idx),
            _ => Err(GameError::RoundClosed(round_id)),
        }
    }

    pub fn submit_guess(&mut self, player: &str, round_id: u32, raw: &str, now: Millis) -> Result<GuessOutcome, GameError> {
        self.ensure_active(now)?;
        let idx = self.open_round_index(player, round_id)?;
        let Some(term) = normalize_term(raw) else {
            return Ok(GuessOutcome::RejectedEmpty);
        };
        let game_id = self.game_id.clone();
        let round = self.rounds.last_mut().unwrap();
        if round.guesses[idx].contains(&term) {
            return Ok(GuessOutcome::RejectedDuplicate);
        }
        round.guesses[idx].push(term.clone());
        let factor_id = round.factor_id;
        self.log.push(LogRecord::Guess(GuessEvent {
            game_id: game_id.clone(),
            round_id,
            factor_id,
            player_id: player.to_string(),
            term: term.clone(),
            timestamp: now,
        }));
        if !round.guesses[1 - idx].contains(&term) {
            return Ok(GuessOutcome::Recorded(term));
        }

        round.outcome = RoundOutcome::Matched(term.clone());
        round.skip_votes = [false, false];
        self.points += self.cfg.match_points;
        self.match_count += 1;
        self.log.push(LogRecord::Match(MatchRecord {
            game_id: game_id.clone(),
            round_id,
            factor_id,
            term: term.clone(),
            timestamp: now,
        }));
        self.log.push(LogRecord::RoundEnd {
            game_id,
            round_id,
            factor_id,
            outcome: RoundEndKind::Matched,
            term: Some(term.clone()),
            points_delta: self.cfg.match_points,
            timestamp: now,
        });
        self.start_round(now)?;
        Ok(GuessOutcome::Matched(term))
    }

    pub fn request_skip(&mut self, player: &str, round_id: u32, now: Millis) -> Result<SkipOutcome, GameError> {
        self.ensure_active(now)?;
        let idx = self.open_round_index(player, round_id)?;
        let game_id = self.game_id.clone();
        let round = self.rounds.last_mut().unwrap();
        if !round.skip_votes[idx] {
            round.skip_votes[idx] = true;
            self.log.push(LogRecord::SkipVote {
                game_id: game_id.clone(),
                round_id,
                factor_id: round.factor_id,
                player_id: player.to_string(),
                timestamp: now,
            });
        }
        if !round.skip_votes.iter().all(|v| *v) {
            return Ok(SkipOutcome::Pending);
        }
        round.outcome = RoundOutcome::Skipped;
        let factor_id = round.factor_id;
        self.points += self.cfg.skip_penalty_points;
        self.skip_count += 1;
        self.log.push(LogRecord::RoundEnd {
            game_id,
            round_id,
            factor_id,
            outcome: RoundEndKind::Skipped,
            term: None,
            points_delta: self.cfg.skip_penalty_points,
            timestamp: now,
        });
        self.start_round(now)?;
        Ok(SkipOutcome::Skipped)
    }

    /// Finishes the game once `now` reaches `ends_at`. Returns the events this
    /// call emitted; they are also appended to the session log.
    pub fn tick(&mut self, now: Millis) -> Vec<LogRecord> {
        if self.status == SessionStatus::Finished || now < self.ends_at {
            return Vec::new();
        }
        self.finish(now, FinishReason::Time)
    }

    /// Ends the game before time, e.g. when a player leaves.
    pub fn finish_early(&mut self, now: Millis, reason: FinishReason) -> Vec<LogRecord> {
        if self.status == SessionStatus::Finished {
            return Vec::new();
        }
        self.finish(now, reason)
    }

    fn finish(&mut self, now: Millis, reason: FinishReason) -> Vec<LogRecord> {
        let start = self.log.len();
        if let Some(round) = self.rounds.last_mut().filter(|r| r.is_open()) {
            round.outcome = RoundOutcome::Expired;
            self.log.push(LogRecord::RoundEnd {
                game_id: self.game_id.clone(),
                round_id: round.round_id,
                factor_id: round.factor_id,
                outcome: RoundEndKind::Expired,
                term: None,
                points_delta: 0,
                timestamp: now,
            });
        }
        self.status = SessionStatus::Finished;
        self.finish_reason = Some(reason);
        let summary = self.tally();
        self.log.push(LogRecord::SessionEnd {
            game_id: self.game_id.clone(),
            players: self.players.clone(),
            points: summary.points,
            match_count: summary.match_count,
            skip_count: summary.skip_count,
            rounds_played: summary.rounds_played,
            reason,
            timestamp: now,
        });
        self.log[start..].to_vec()
    }

    fn tally(&self) -> SessionSummary {
        SessionSummary {
            points: self.points,
            match_count: self.match_count,
            skip_count: self.skip_count,
            rounds_played: self.match_count + self.skip_count,
        }
    }

    pub fn summary(&self) -> Result<SessionSummary, GameError> {
        match self.status {
            SessionStatus::Finished => Ok(self.tally()),
            SessionStatus::Active => Err(GameError::StillActive),
        }
    }
}
