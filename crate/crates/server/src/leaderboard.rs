use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use lfg_core::log::{LogRecord, Millis};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub player_id: String,
    pub display_name: String,
    pub total_points: i64,
    pub games_played: u32,
    pub total_matches: u32,
    pub first_game_at: Millis,
}

/// Per-player totals folded from finished sessions in the event log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Leaderboard {
    players: HashMap<String, PlayerProfile>,
    started: HashMap<String, Millis>,
}

impl Leaderboard {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a LogRecord>) -> Self {
        let mut board = Self::default();
        for rec in records {
            board.apply(rec);
        }
        board
    }

    pub fn apply(&mut self, rec: &LogRecord) {
        match rec {
            LogRecord::SessionStart { game_id, started_at, .. } => {
                self.started.insert(game_id.clone(), *started_at);
            }
            LogRecord::SessionEnd {
                game_id,
                players,
                points,
                match_count,
                timestamp,
                ..
            } => {
                let started = self.started.remove(game_id).unwrap_or(*timestamp);
                for name in players {
                    let p = self.players.entry(name.clone()).or_insert_with(|| PlayerProfile {
                        player_id: name.clone(),
                        display_name: name.clone(),
                        total_points: 0,
                        games_played: 0,
                        total_matches: 0,
                        first_game_at: started,
                    });
                    p.total_points += points;
                    p.games_played += 1;
                    p.total_matches += match_count;
                    p.first_game_at = p.first_game_at.min(started);
                }
            }
            _ => {}
        }
    }

    /// Highest totals first; equal totals go to whoever played first.
    pub fn top(&self, n: usize) -> Vec<PlayerProfile> {
        let mut all: Vec<PlayerProfile> = self.players.values().cloned().collect();
        all.sort_by(|a, b| {
            b.total_points
                .cmp(&a.total_points)
                .then(a.first_game_at.cmp(&b.first_game_at))
                .then_with(|| a.player_id.cmp(&b.player_id))
        });
        all.truncate(n);
        all
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }
}
