//! Append-only game event log.
//!
//! One JSON object per line, discriminated by `kind`. Timestamps are
//! milliseconds since the Unix epoch. Factor ids are zero-based model column
//! indices and round ids count from zero within a game.
//!
//! | kind            | fields |
//! |-----------------|--------|
//! | `session_start` | game_id, players, factor_count, started_at, ends_at |
//! | `round_start`   | game_id, round_id, factor_id, item_ids, timestamp |
//! | `guess`         | game_id, round_id, factor_id, player_id, term, timestamp |
//! | `match`         | game_id, round_id, factor_id, term, timestamp |
//! | `skip_vote`     | game_id, round_id, factor_id, player_id, timestamp |
//! | `round_end`     | game_id, round_id, factor_id, outcome, term, points_delta, timestamp |
//! | `session_end`   | game_id, players, points, match_count, skip_count, rounds_played, reason, timestamp |

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

pub type Millis = u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuessEvent {
    pub game_id: String,
    pub round_id: u32,
    pub factor_id: usize,
    pub player_id: String,
    pub term: String,
    pub timestamp: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub game_id: String,
    pub round_id: u32,
    pub factor_id: usize,
    pub term: String,
    pub timestamp: Millis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundEndKind {
    Matched,
    Skipped,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Time,
    PartnerLeft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    SessionStart {
        game_id: String,
        players: [String; 2],
        factor_count: usize,
        started_at: Millis,
        ends_at: Millis,
    },
    RoundStart {
        game_id: String,
        round_id: u32,
        factor_id: usize,
        item_ids: Vec<u64>,
        timestamp: Millis,
    },
    Guess(GuessEvent),
    Match(MatchRecord),
    SkipVote {
        game_id: String,
        round_id: u32,
        factor_id: usize,
        player_id: String,
        timestamp: Millis,
    },
    RoundEnd {
        game_id: String,
        round_id: u32,
        factor_id: usize,
        outcome: RoundEndKind,
        term: Option<String>,
        points_delta: i64,
        timestamp: Millis,
    },
    SessionEnd {
        game_id: String,
        players: [String; 2],
        points: i64,
        match_count: u32,
        skip_count: u32,
        rounds_played: u32,
        reason: FinishReason,
        timestamp: Millis,
    },
}

impl LogRecord {
    pub fn game_id(&self) -> &str {
        match self {
            LogRecord::SessionStart { game_id, .. }
            | LogRecord::RoundStart { game_id, .. }
            | LogRecord::SkipVote { game_id, .. }
            | LogRecord::RoundEnd { game_id, .. }
            | LogRecord::SessionEnd { game_id, .. } => game_id,
            LogRecord::Guess(g) => &g.game_id,
            LogRecord::Match(m) => &m.game_id,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records always serialize")
    }
}

/// Records read from a log, plus the number of lines that failed to parse.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogContents {
    pub records: Vec<LogRecord>,
    pub corrupt: usize,
}

pub fn read_log<R: BufRead>(reader: R) -> io::Result<LogContents> {
    let mut out = LogContents::default();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LogRecord>(&line) {
            Ok(rec) => out.records.push(rec),
            Err(_) => out.corrupt += 1,
        }
    }
    Ok(out)
}

pub fn write_log<W: Write>(mut writer: W, records: &[LogRecord]) -> io::Result<()> {
    for rec in records {
        writeln!(writer, "{}", rec.to_line())?;
    }
    writer.flush()
}
