use std::collections::HashSet;
use std::sync::Arc;

use lfg_core::game::{GameConfig, GameError, GameSession, GuessOutcome, RoundOutcome, SkipOutcome};
use lfg_core::log::LogRecord;
use lfg_core::representatives::{FactorRepresentatives, RepresentativeEntry, RepresentativeSet};
use proptest::prelude::*;

fn reps(k: usize, per_factor: usize) -> Arc<RepresentativeSet> {
    Arc::new(RepresentativeSet {
        factors: (0..k)
            .map(|f| FactorRepresentatives {
                factor: f,
                threshold: 0.0,
                pool_size: per_factor,
                undersized: false,
                entries: (0..per_factor)
                    .map(|i| RepresentativeEntry {
                        item_id: (f * 100 + i) as u64,
                        popularity: 0.5,
                        relevance: 0.5,
                        specificity: 0.5,
                        score: 0.5,
                    })
                    .collect(),
            })
            .collect(),
    })
}

#[derive(Debug, Clone)]
enum Action {
    Guess(usize, &'static str),
    Skip(usize),
    Advance(u64),
}

const VOCAB: [&str; 6] = ["action", "Action", "comedy", "love", "war ", "  "];

fn arb_action() -> impl Strategy<Value = Action> {
    prop_oneof![
        6 => (0usize..2, prop::sample::select(VOCAB.to_vec())).prop_map(|(p, t)| Action::Guess(p, t)),
        2 => (0usize..2).prop_map(Action::Skip),
        1 => (1u64..40_000).prop_map(Action::Advance),
    ]
}

#[derive(Debug, PartialEq)]
enum Step {
    Guess(Result<GuessOutcome, GameError>),
    Skip(Result<SkipOutcome, GameError>),
    Tick(usize),
}

const PLAYERS: [&str; 2] = ["ann", "bob"];

fn run(actions: &[Action], swap: bool, seed: u64) -> (GameSession, Vec<Step>) {
    let cfg = GameConfig { seed, ..GameConfig::default() };
    let mut s = GameSession::create("g", PLAYERS[0], PLAYERS[1], reps(4, 6), cfg, 0).unwrap();
    let mut now = 0;
    let mut steps = Vec::new();
    let who = |p: usize| PLAYERS[if swap { 1 - p } else { p }];
    for a in actions {
        let round = s.rounds().last().unwrap().round_id;
        let step = match a {
            Action::Guess(p, t) => Step::Guess(s.submit_guess(who(*p), round, t, now)),
            Action::Skip(p) => Step::Skip(s.request_skip(who(*p), round, now)),
            Action::Advance(ms) => {
                now += ms;
                Step::Tick(s.tick(now).len())
            }
        };
        steps.push(step);
        let matches = s.rounds().iter().filter(|r| matches!(r.outcome, RoundOutcome::Matched(_))).count() as i64;
        let skips = s.rounds().iter().filter(|r| r.outcome == RoundOutcome::Skipped).count() as i64;
        assert_eq!(s.points(), matches * 100 - skips * 20);
        assert!(s.rounds().iter().filter(|r| r.is_open()).count() <= 1);
    }
    (s, steps)
}

proptest! {
    #[test]
    fn replay_is_deterministic(actions in proptest::collection::vec(arb_action(), 0..60), seed in any::<u64>()) {
        let (a, steps_a) = run(&actions, false, seed);
        let (b, steps_b) = run(&actions, false, seed);
        prop_assert_eq!(steps_a, steps_b);
        prop_assert_eq!(a.events(), b.events());
        prop_assert_eq!(a.rounds(), b.rounds());
    }

    #[test]
    fn matching_is_symmetric(actions in proptest::collection::vec(arb_action(), 0..60), seed in any::<u64>()) {
        let (_, plain) = run(&actions, false, seed);
        let (_, swapped) = run(&actions, true, seed);
        prop_assert_eq!(plain, swapped);
    }

    #[test]
    fn matched_terms_appear_in_both_guess_streams(actions in proptest::collection::vec(arb_action(), 0..80), seed in any::<u64>()) {
        let (s, _) = run(&actions, false, seed);
        let events = s.events();
        for rec in events {
            if let LogRecord::Match(m) = rec {
                let guessed_by: HashSet<&str> = events
                    .iter()
                    .filter_map(|r| match r {
                        LogRecord::Guess(g) if g.round_id == m.round_id && g.term == m.term => Some(g.player_id.as_str()),
                        _ => None,
                    })
                    .collect();
                prop_assert_eq!(guessed_by.len(), 2);
            }
        }
        // every closed round has exactly one outcome and round ids are ordered
        for (n, r) in s.rounds().iter().enumerate() {
            prop_assert_eq!(r.round_id as usize, n);
        }
    }

    #[test]
    fn summary_equals_log_replay(actions in proptest::collection::vec(arb_action(), 0..60), seed in any::<u64>()) {
        let (mut s, _) = run(&actions, false, seed);
        s.tick(s.ends_at());
        let summary = s.summary().unwrap();
        let mut points = 0;
        let (mut matches, mut skips) = (0, 0);
        for rec in s.events() {
            match rec {
                LogRecord::Match(_) => matches += 1,
                LogRecord::RoundEnd { points_delta, outcome, .. } => {
                    points += points_delta;
                    if *outcome == lfg_core::log::RoundEndKind::Skipped {
                        skips += 1;
                    }
                }
                _ => {}
            }
        }
        prop_assert_eq!(summary.points, points);
        prop_assert_eq!(summary.match_count, matches);
        prop_assert_eq!(summary.skip_count, skips);
        prop_assert_eq!(summary.rounds_played, matches + skips);
    }
}
