//! Reference data from the original ten-factor movie study: per-factor guess
//! and match totals and the terms that reached two or more matches.
//!
//! [`study_log`] expands these numbers into a complete event log (84 players,
//! 173 games) whose aggregate reproduces them exactly. Matches that did not
//! reach the good-label threshold are represented by single-use filler terms,
//! and unmatched guesses by unique filler terms, since the study only
//! published totals for those.

use crate::log::{FinishReason, GuessEvent, LogRecord, MatchRecord, Millis, RoundEndKind};

pub struct StudyFactor {
    pub sample_titles: [&'static str; 3],
    pub guesses: u64,
    pub matches: u64,
    /// Terms with at least two matches.
    pub terms: &'static [(&'static str, u64)],
}

pub const STUDY_PLAYERS: usize = 84;
pub const STUDY_GAMES: usize = 173;
pub const STUDY_MATCH_POINTS: i64 = 100;

pub const STUDY_FACTORS: [StudyFactor; 10] = [
    StudyFactor {
        sample_titles: ["The Lion King", "Bad Boys", "Home Alone"],
        guesses: 620,
        matches: 54,
        terms: &[("comedy", 10), ("funny", 8), ("disney", 4), ("action", 3), ("love", 3), ("fight", 2), ("sex", 2)],
    },
    StudyFactor {
        sample_titles: ["Forrest Gump", "Fight Club", "Se7en"],
        guesses: 612,
        matches: 57,
        terms: &[
            ("action", 13),
            ("fight", 4),
            ("man", 4),
            ("serious", 4),
            ("thrilling", 3),
            ("comedy", 2),
            ("dog", 2),
            ("drama", 2),
            ("thriller", 2),
            ("war", 2),
        ],
    },
    StudyFactor {
        sample_titles: ["Jurassic Park", "Rocky V", "Star Wars"],
        guesses: 589,
        matches: 51,
        terms: &[("action", 12), ("war", 5), ("fight", 4), ("comedy", 3), ("drama", 2)],
    },
    StudyFactor {
        sample_titles: ["Cast Away", "Meet the Parents", "Waterworld"],
        guesses: 565,
        matches: 49,
        terms: &[("action", 13), ("comedy", 8), ("drama", 2), ("funny", 2), ("spooky", 2), ("thriller", 2)],
    },
    StudyFactor {
        sample_titles: ["The Doors", "The Beach", "Casino"],
        guesses: 562,
        matches: 55,
        terms: &[
            ("action", 7),
            ("comedy", 5),
            ("horror", 5),
            ("love", 5),
            ("spooky", 3),
            ("erotic", 2),
            ("mystery", 2),
            ("old", 2),
        ],
    },
    StudyFactor {
        sample_titles: ["Indiana Jones", "Speed", "Aliens"],
        guesses: 580,
        matches: 65,
        terms: &[
            ("action", 24),
            ("comedy", 3),
            ("adventure", 2),
            ("alien", 2),
            ("fight", 2),
            ("love", 2),
            ("old", 2),
            ("weapons", 2),
        ],
    },
    StudyFactor {
        sample_titles: ["Nude Girls", "American Pie", "Harold & Kumar"],
        guesses: 423,
        matches: 42,
        terms: &[("comedy", 10), ("sex", 7), ("action", 2), ("college", 2), ("drama", 2)],
    },
    StudyFactor {
        sample_titles: ["The Net", "Dave", "Groundhog Day"],
        guesses: 438,
        matches: 50,
        terms: &[
            ("love", 12),
            ("comedy", 5),
            ("family", 3),
            ("action", 2),
            ("america", 2),
            ("boring", 2),
            ("romance", 2),
            ("sex", 2),
            ("woman", 2),
        ],
    },
    StudyFactor {
        sample_titles: ["Batman Forever", "Deep Impact", "Twister"],
        guesses: 754,
        matches: 66,
        terms: &[
            ("action", 18),
            ("horror", 6),
            ("sci-fi", 3),
            ("spooky", 3),
            ("alien", 2),
            ("aliens", 2),
            ("batman", 2),
            ("comedy", 2),
            ("future", 2),
        ],
    },
    StudyFactor {
        sample_titles: ["Pretty Woman", "Big", "E.T."],
        guesses: 598,
        matches: 56,
        terms: &[
            ("love", 11),
            ("comedy", 6),
            ("family", 4),
            ("action", 3),
            ("animals", 3),
            ("romance", 3),
            ("romantic", 3),
            ("dramatic", 2),
        ],
    },
];

struct PlannedRound {
    factor: usize,
    term: String,
    extra_guesses: Vec<String>,
}

fn plan_factor(factor: usize, spec: &StudyFactor) -> Vec<PlannedRound> {
    let mut rounds: Vec<PlannedRound> = Vec::new();
    for (term, count) in spec.terms {
        for _ in 0..*count {
            rounds.push(PlannedRound {
                factor,
                term: term.to_string(),
                extra_guesses: Vec::new(),
            });
        }
    }
    let surviving: u64 = spec.terms.iter().map(|(_, c)| c).sum();
    for n in 0..spec.matches - surviving {
        rounds.push(PlannedRound {
            factor,
            term: format!("f{}-once-{n}", factor + 1),
            extra_guesses: Vec::new(),
        });
    }
    let extra = spec.guesses - 2 * spec.matches;
    let len = rounds.len();
    for n in 0..extra as usize {
        rounds[n % len].extra_guesses.push(format!("f{}-miss-{n}", factor + 1));
    }
    rounds
}

/// Builds the reference event log. Factor `i` of the study is factor id `i - 1`.
pub fn study_log() -> Vec<LogRecord> {
    let mut per_factor: Vec<std::collections::VecDeque<PlannedRound>> = STUDY_FACTORS
        .iter()
        .enumerate()
        .map(|(f, spec)| plan_factor(f, spec).into())
        .collect();
    // interleave factors so that consecutive rounds mostly differ
    let mut interleaved = Vec::new();
    while per_factor.iter().any(|q| !q.is_empty()) {
        for q in per_factor.iter_mut() {
            if let Some(r) = q.pop_front() {
                interleaved.push(r);
            }
        }
    }
    let mut games: Vec<Vec<PlannedRound>> = (0..STUDY_GAMES).map(|_| Vec::new()).collect();
    for (n, round) in interleaved.into_iter().enumerate() {
        games[n % STUDY_GAMES].push(round);
    }

    let mut log = Vec::new();
    for (g, rounds) in games.into_iter().enumerate() {
        let game_id = format!("study-{g:03}");
        let players = [
            format!("player-{:02}", (2 * g) % STUDY_PLAYERS),
            format!("player-{:02}", (2 * g + 1) % STUDY_PLAYERS),
        ];
        let started_at: Millis = 1_500_000_000_000 + g as Millis * 600_000;
        let ends_at = started_at + 180_000;
        log.push(LogRecord::SessionStart {
            game_id: game_id.clone(),
            players: players.clone(),
            factor_count: STUDY_FACTORS.len(),
            started_at,
            ends_at,
        });
        let mut t = started_at;
        let mut tick = || {
            t += 1_000;
            t
        };
        let match_count = rounds.len() as u32;
        for (round_id, round) in rounds.into_iter().enumerate() {
            let round_id = round_id as u32;
            log.push(LogRecord::RoundStart {
                game_id: game_id.clone(),
                round_id,
                factor_id: round.factor,
                item_ids: Vec::new(),
                timestamp: tick(),
            });
            let guess = |player: &str, term: &str, timestamp| {
                LogRecord::Guess(GuessEvent {
                    game_id: game_id.clone(),
                    round_id,
                    factor_id: round.factor,
                    player_id: player.to_string(),
                    term: term.to_string(),
                    timestamp,
                })
            };
            for (n, term) in round.extra_guesses.iter().enumerate() {
                log.push(guess(&players[n % 2], term, tick()));
            }
            log.push(guess(&players[0], &round.term, tick()));
            let ts = tick();
            log.push(guess(&players[1], &round.term, ts));
            log.push(LogRecord::Match(MatchRecord {
                game_id: game_id.clone(),
                round_id,
                factor_id: round.factor,
                term: round.term.clone(),
                timestamp: ts,
            }));
            log.push(LogRecord::RoundEnd {
                game_id: game_id.clone(),
                round_id,
                factor_id: round.factor,
                outcome: RoundEndKind::Matched,
                term: Some(round.term.clone()),
                points_delta: STUDY_MATCH_POINTS,
                timestamp: ts,
            });
        }
        log.push(LogRecord::SessionEnd {
            game_id: game_id.clone(),
            players,
            points: match_count as i64 * STUDY_MATCH_POINTS,
            match_count,
            skip_count: 0,
            rounds_played: match_count,
            reason: FinishReason::Time,
            timestamp: ends_at,
        });
    }
    log
}
