//! Synchronous core of the live service: lobby, active sessions and the
//! message routing between them. Transport code feeds it parsed text and the
//! current time and delivers whatever it returns.

use std::collections::{HashMap, VecDeque};
use std::io;
use std::sync::Arc;

use lfg_core::game::{GameConfig, GameError, GameSession, GuessOutcome, SkipOutcome};
use lfg_core::ingest::Catalog;
use lfg_core::log::{FinishReason, LogRecord, Millis, RoundEndKind};

use crate::leaderboard::{Leaderboard, PlayerProfile};
use crate::pipeline::Snapshot;
use crate::protocol::{ClientMessage, GameEndReason, ItemCard, RoundEndOutcome, ServerMessage};
use crate::store::EventStore;

pub type ConnId = u64;
/// Messages to deliver, in order.
pub type Outbox = Vec<(ConnId, ServerMessage)>;

pub const MAX_NAME_LEN: usize = 40;

#[derive(Debug, Default)]
struct Conn {
    name: Option<String>,
    game: Option<String>,
}

struct LiveGame {
    session: GameSession,
    conns: [ConnId; 2],
    catalog: Arc<Catalog>,
}

pub struct Hub {
    cfg: GameConfig,
    store: EventStore,
    snapshot: Arc<Snapshot>,
    next_conn: ConnId,
    conns: HashMap<ConnId, Conn>,
    queue: VecDeque<ConnId>,
    games: HashMap<String, LiveGame>,
    leaderboard: Leaderboard,
    games_started: u64,
}

fn err(conn: ConnId, code: &str, message: impl Into<String>) -> Outbox {
    vec![(conn, ServerMessage::error(code, message))]
}

impl Hub {
    /// Rebuilds the leaderboard and the game counter from the existing log.
    pub fn new(cfg: GameConfig, store: EventStore, snapshot: Snapshot) -> io::Result<Self> {
        let contents = store.read_all()?;
        if contents.corrupt > 0 {
            tracing::warn!(corrupt = contents.corrupt, "skipped corrupt event log lines");
        }
        let games_started =
            contents.records.iter().filter(|r| matches!(r, LogRecord::SessionStart { .. })).count() as u64;
        Ok(Self {
            cfg,
            store,
            snapshot: Arc::new(snapshot),
            next_conn: 1,
            conns: HashMap::new(),
            queue: VecDeque::new(),
            games: HashMap::new(),
            leaderboard: Leaderboard::from_records(&contents.records),
            games_started,
        })
    }

    pub fn snapshot(&self) -> &Arc<Snapshot> {
        &self.snapshot
    }

    /// Publishes new content for games started from now on. Running games keep
    /// the representatives they started with.
    pub fn install_snapshot(&mut self, snapshot: Snapshot) {
        self.snapshot = Arc::new(snapshot);
    }

    pub fn leaderboard(&self, top: usize) -> Vec<PlayerProfile> {
        self.leaderboard.top(top)
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn active_games(&self) -> usize {
        self.games.len()
    }

    pub fn session(&self, game_id: &str) -> Option<&GameSession> {
        self.games.get(game_id).map(|g| &g.session)
    }

    pub fn store(&self) -> &EventStore {
        &self.store
    }

    pub fn connect(&mut self) -> ConnId {
        let id = self.next_conn;
        self.next_conn += 1;
        self.conns.insert(id, Conn::default());
        id
    }

    pub fn route_message(&mut self, conn: ConnId, raw: &str, now: Millis) -> Outbox {
        match serde_json::from_str::<ClientMessage>(raw) {
            Ok(msg) => self.handle(conn, msg, now),
            Err(e) => err(conn, "bad_schema", e.to_string()),
        }
    }

    pub fn handle(&mut self, conn: ConnId, msg: ClientMessage, now: Millis) -> Outbox {
        if !self.conns.contains_key(&conn) {
            return Vec::new();
        }
        match msg {
            ClientMessage::JoinQueue { name } => self.join(conn, &name, now),
            ClientMessage::Guess { game_id, round_id, term } => self.guess(conn, &game_id, &round_id, &term, now),
            ClientMessage::Skip { game_id, round_id } => self.skip(conn, &game_id, &round_id, now),
            ClientMessage::Leave => self.leave(conn, now),
        }
    }

    /// Leaving the lobby or a game, with the partner told why their game ended.
    pub fn leave(&mut self, conn: ConnId, now: Millis) -> Outbox {
        self.queue.retain(|c| *c != conn);
        let mut out = Vec::new();
        if let Some(game_id) = self.conns.get(&conn).and_then(|c| c.game.clone()) {
            if let Some(game) = self.games.get_mut(&game_id) {
                let records = game.session.finish_early(now, FinishReason::PartnerLeft);
                out = self.close_game(&game_id, &records, Some(conn));
            }
        }
        if let Some(c) = self.conns.get_mut(&conn) {
            *c = Conn::default();
        }
        out
    }

    pub fn disconnect(&mut self, conn: ConnId, now: Millis) -> Outbox {
        let out = self.leave(conn, now);
        self.conns.remove(&conn);
        out
    }

    /// Ends every game whose time is up.
    pub fn tick(&mut self, now: Millis) -> Outbox {
        let mut due: Vec<String> = self
            .games
            .iter()
            .filter(|(_, g)| now >= g.session.ends_at())
            .map(|(id, _)| id.clone())
            .collect();
        due.sort();
        let mut out = Vec::new();
        for game_id in due {
            let records = self.games.get_mut(&game_id).unwrap().session.tick(now);
            out.extend(self.close_game(&game_id, &records, None));
        }
        out
    }

    fn join(&mut self, conn: ConnId, name: &str, now: Millis) -> Outbox {
        let name = name.trim();
        if name.is_empty() || name.chars().count() > MAX_NAME_LEN {
            return err(conn, "invalid_name", format!("name must be 1-{MAX_NAME_LEN} characters"));
        }
        if self.conns[&conn].game.is_some() {
            return err(conn, "already_playing", "finish the current game first");
        }
        if self.queue.contains(&conn) {
            return err(conn, "already_queued", "already waiting for a partner");
        }
        let taken = self
            .conns
            .iter()
            .any(|(id, c)| *id != conn && c.name.as_deref() == Some(name) && (c.game.is_some() || self.queue.contains(id)));
        if taken {
            return err(conn, "name_taken", format!("{name} is already playing"));
        }
        self.conns.get_mut(&conn).unwrap().name = Some(name.to_string());
        let mut out = vec![(conn, ServerMessage::Queued)];
        match self.queue.pop_front() {
            Some(partner) => out.extend(self.start_game(partner, conn, now)),
            None => self.queue.push_back(conn),
        }
        out
    }

    fn start_game(&mut self, a: ConnId, b: ConnId, now: Millis) -> Outbox {
        let names = [a, b].map(|c| self.conns[&c].name.clone().unwrap_or_default());
        let n = self.games_started;
        let game_id = format!("g{n}");
        let cfg = GameConfig {
            seed: self.cfg.seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..self.cfg.clone()
        };
        let reps = self.snapshot.representatives.clone();
        let mut session = match GameSession::create(&game_id, &names[0], &names[1], reps, cfg, now) {
            Ok(s) => s,
            Err(e) => {
                let mut out = err(a, "unavailable", e.to_string());
                out.extend(err(b, "unavailable", e.to_string()));
                return out;
            }
        };
        self.games_started += 1;
        if let Err(e) = self.store.append(&session.take_events()) {
            tracing::error!("event log write failed: {e}");
            let mut out = err(a, "storage", "game could not be recorded");
            out.extend(err(b, "storage", "game could not be recorded"));
            return out;
        }
        for c in [a, b] {
            self.conns.get_mut(&c).unwrap().game = Some(game_id.clone());
        }
        let game = LiveGame {
            session,
            conns: [a, b],
            catalog: self.snapshot.catalog.clone(),
        };
        let mut out = Vec::new();
        for (i, c) in [a, b].into_iter().enumerate() {
            out.push((
                c,
                ServerMessage::GameStart {
                    game_id: game_id.clone(),
                    ends_at: game.session.ends_at(),
                    partner_name: names[1 - i].clone(),
                },
            ));
        }
        let start = round_start(&game);
        out.extend([(a, start.clone()), (b, start)]);
        self.games.insert(game_id, game);
        out
    }

    /// Resolves the caller's game, checking the id it claims to be playing.
    fn game_of(&self, conn: ConnId, game_id: &str) -> Result<(String, String), Outbox> {
        let c = &self.conns[&conn];
        match (&c.game, &c.name) {
            (Some(g), Some(name)) if g == game_id && self.games.contains_key(g) => Ok((g.clone(), name.clone())),
            _ => Err(err(conn, "unknown_game", format!("not playing game {game_id}"))),
        }
    }

    fn persist(&mut self, game_id: &str) -> Result<(), io::Error> {
        let records = self.games.get_mut(game_id).unwrap().session.take_events();
        self.store.append(&records).inspect_err(|e| tracing::error!("event log write failed: {e}"))
    }

    fn guess(&mut self, conn: ConnId, game_id: &str, round_id: &str, term: &str, now: Millis) -> Outbox {
        let (game_id, name) = match self.game_of(conn, game_id) {
            Ok(v) => v,
            Err(out) => return out,
        };
        let Ok(round) = round_id.parse::<u32>() else {
            return err(conn, "stale_round", format!("no open round {round_id}"));
        };
        let game = self.games.get_mut(&game_id).unwrap();
        let outcome = game.session.submit_guess(&name, round, term, now);
        let idx = game.session.player_index(&name).unwrap();
        let partner = game.conns[1 - idx];
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => return game_error(conn, e),
        };
        if let GuessOutcome::RejectedDuplicate | GuessOutcome::RejectedEmpty = outcome {
            return match outcome {
                GuessOutcome::RejectedDuplicate => err(conn, "duplicate_guess", "already guessed this round"),
                _ => err(conn, "empty_guess", "guess is empty"),
            };
        }
        if self.persist(&game_id).is_err() {
            return err(conn, "storage", "guess could not be recorded");
        }
        let game = &self.games[&game_id];
        match outcome {
            GuessOutcome::Recorded(term) => {
                let guess_count = game.session.rounds()[round as usize].guesses[idx].len() as u32;
                vec![
                    (conn, ServerMessage::GuessAck { term }),
                    (partner, ServerMessage::PartnerActivity { guess_count }),
                ]
            }
            GuessOutcome::Matched(term) => {
                let end = ServerMessage::RoundEnd {
                    outcome: RoundEndOutcome::Match,
                    term: Some(term.clone()),
                    points_delta: game.session.config().match_points,
                };
                let start = round_start(game);
                vec![
                    (conn, ServerMessage::GuessAck { term }),
                    (conn, end.clone()),
                    (partner, end),
                    (conn, start.clone()),
                    (partner, start),
                ]
            }
            GuessOutcome::RejectedDuplicate | GuessOutcome::RejectedEmpty => unreachable!(),
        }
    }

    fn skip(&mut self, conn: ConnId, game_id: &str, round_id: &str, now: Millis) -> Outbox {
        let (game_id, name) = match self.game_of(conn, game_id) {
            Ok(v) => v,
            Err(out) => return out,
        };
        let Ok(round) = round_id.parse::<u32>() else {
            return err(conn, "stale_round", format!("no open round {round_id}"));
        };
        let game = self.games.get_mut(&game_id).unwrap();
        let [a, b] = game.conns;
        let outcome = match game.session.request_skip(&name, round, now) {
            Ok(o) => o,
            Err(e) => return game_error(conn, e),
        };
        if self.persist(&game_id).is_err() {
            return err(conn, "storage", "skip could not be recorded");
        }
        let game = &self.games[&game_id];
        match outcome {
            SkipOutcome::Pending => vec![(a, ServerMessage::SkipPending), (b, ServerMessage::SkipPending)],
            SkipOutcome::Skipped => {
                let end = ServerMessage::RoundEnd {
                    outcome: RoundEndOutcome::Skipped,
                    term: None,
                    points_delta: game.session.config().skip_penalty_points,
                };
                let start = round_start(game);
                vec![(a, end.clone()), (b, end), (a, start.clone()), (b, start)]
            }
        }
    }

    /// Persists the closing records, folds them into the leaderboard and tells
    /// the remaining players.
    fn close_game(&mut self, game_id: &str, records: &[LogRecord], leaver: Option<ConnId>) -> Outbox {
        let Some(game) = self.games.remove(game_id) else {
            return Vec::new();
        };
        if let Err(e) = self.store.append(records) {
            tracing::error!("event log write failed: {e}");
        }
        for rec in records {
            self.leaderboard.apply(rec);
        }
        let expired = records
            .iter()
            .any(|r| matches!(r, LogRecord::RoundEnd { outcome: RoundEndKind::Expired, .. }));
        let reason = match game.session.finish_reason() {
            Some(FinishReason::PartnerLeft) => GameEndReason::PartnerLeft,
            _ => GameEndReason::Time,
        };
        let mut out = Vec::new();
        for c in game.conns {
            if let Some(conn) = self.conns.get_mut(&c) {
                conn.game = None;
            }
            if Some(c) == leaver {
                continue;
            }
            if expired {
                out.push((
                    c,
                    ServerMessage::RoundEnd {
                        outcome: RoundEndOutcome::Expired,
                        term: None,
                        points_delta: 0,
                    },
                ));
            }
            out.push((
                c,
                ServerMessage::GameEnd {
                    total_points: game.session.points(),
                    match_count: game.session.match_count(),
                    reason,
                },
            ));
        }
        out
    }
}

fn game_error(conn: ConnId, e: GameError) -> Outbox {
    match e {
        GameError::RoundClosed(r) => err(conn, "stale_round", format!("round {r} is closed")),
        GameError::TimeUp | GameError::SessionFinished => err(conn, "game_over", "the game is over"),
        other => err(conn, "invalid", other.to_string()),
    }
}

fn round_start(game: &LiveGame) -> ServerMessage {
    let round = game.session.current_round().expect("active session has an open round");
    ServerMessage::RoundStart {
        round_id: round.round_id.to_string(),
        items: round
            .item_ids
            .iter()
            .map(|id| match game.catalog.get(*id) {
                Some(meta) => ItemCard::from(meta),
                None => ItemCard {
                    title: format!("Item {id}"),
                    poster_url: String::new(),
                    plot: String::new(),
                    cast: Vec::new(),
                    director: String::new(),
                },
            })
            .collect(),
    }
}
