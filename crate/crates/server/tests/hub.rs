mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use lfg_core::game::GameConfig;
use lfg_core::log::LogRecord;
use lfg_server::protocol::{GameEndReason, RoundEndOutcome, ServerMessage};
use lfg_server::store::EventStore;
use lfg_server::{ConnId, Hub, Outbox};

fn hub_in(dir: &std::path::Path, k: usize) -> Hub {
    let store = EventStore::open(dir.join("events.jsonl")).unwrap();
    Hub::new(GameConfig::default(), store, common::snapshot(1, k, 6)).unwrap()
}

fn join(hub: &mut Hub, conn: ConnId, name: &str, now: u64) -> Outbox {
    hub.route_message(conn, &format!(r#"{{"type":"join_queue","name":"{name}"}}"#), now)
}

fn guess(hub: &mut Hub, conn: ConnId, game: &str, round: &str, term: &str, now: u64) -> Outbox {
    hub.route_message(
        conn,
        &serde_json::json!({"type":"guess","game_id":game,"round_id":round,"term":term}).to_string(),
        now,
    )
}

fn skip(hub: &mut Hub, conn: ConnId, game: &str, round: &str, now: u64) -> Outbox {
    hub.route_message(conn, &serde_json::json!({"type":"skip","game_id":game,"round_id":round}).to_string(), now)
}

fn to(out: &Outbox, conn: ConnId) -> Vec<ServerMessage> {
    out.iter().filter(|(c, _)| *c == conn).map(|(_, m)| m.clone()).collect()
}

fn error_code(out: &Outbox) -> Option<String> {
    out.iter().find_map(|(_, m)| match m {
        ServerMessage::Error { code, .. } => Some(code.clone()),
        _ => None,
    })
}

/// Pairs two fresh connections and returns them with the game id.
fn paired(hub: &mut Hub) -> (ConnId, ConnId, String) {
    let (a, b) = (hub.connect(), hub.connect());
    join(hub, a, "ann", 0);
    let out = join(hub, b, "bob", 0);
    let game_id = out
        .iter()
        .find_map(|(_, m)| match m {
            ServerMessage::GameStart { game_id, .. } => Some(game_id.clone()),
            _ => None,
        })
        .unwrap();
    (a, b, game_id)
}

fn current_round(hub: &Hub, game: &str) -> String {
    hub.session(game).unwrap().current_round().unwrap().round_id.to_string()
}

#[test]
fn pairs_in_arrival_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let conns: Vec<ConnId> = (0..3).map(|_| hub.connect()).collect();
    assert_eq!(to(&join(&mut hub, conns[0], "ann", 0), conns[0]), vec![ServerMessage::Queued]);
    let out = join(&mut hub, conns[1], "bob", 5);
    let starts: Vec<_> = to(&out, conns[0]);
    assert!(matches!(&starts[0], ServerMessage::GameStart { partner_name, ends_at: 180_005, .. } if partner_name == "bob"));
    assert!(matches!(&starts[1], ServerMessage::RoundStart { round_id, items } if round_id == "0" && items.len() == 3));
    assert!(matches!(&to(&out, conns[1])[1], ServerMessage::GameStart { partner_name, .. } if partner_name == "ann"));
    assert_eq!(to(&join(&mut hub, conns[2], "cat", 6), conns[2]), vec![ServerMessage::Queued]);
    assert_eq!((hub.active_games(), hub.queue_len()), (1, 1));
}

#[test]
fn rejects_double_join_and_taken_names() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let (a, b) = (hub.connect(), hub.connect());
    join(&mut hub, a, "ann", 0);
    assert_eq!(error_code(&join(&mut hub, a, "ann", 0)).as_deref(), Some("already_queued"));
    assert_eq!(error_code(&join(&mut hub, b, "ann", 0)).as_deref(), Some("name_taken"));
    assert_eq!(error_code(&join(&mut hub, b, "   ", 0)).as_deref(), Some("invalid_name"));
    assert_eq!(hub.queue_len(), 1);
}

#[test]
fn malformed_messages_get_bad_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let a = hub.connect();
    for raw in ["{", r#"{"type":"guess"}"#, r#"{"type":"dance"}"#] {
        assert_eq!(error_code(&hub.route_message(a, raw, 0)).as_deref(), Some("bad_schema"));
    }
    assert_eq!(error_code(&guess(&mut hub, a, "g0", "0", "x", 0)).as_deref(), Some("unknown_game"));
}

#[test]
fn guesses_stay_private_until_matched() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let (a, b, g) = paired(&mut hub);
    let out = guess(&mut hub, a, &g, "0", "  Space  Opera ", 1_000);
    assert_eq!(to(&out, a), vec![ServerMessage::GuessAck { term: "space opera".into() }]);
    assert_eq!(to(&out, b), vec![ServerMessage::PartnerActivity { guess_count: 1 }]);
    assert_eq!(error_code(&guess(&mut hub, a, &g, "0", "space opera", 1_100)).as_deref(), Some("duplicate_guess"));
    assert_eq!(error_code(&guess(&mut hub, a, &g, "0", " ", 1_100)).as_deref(), Some("empty_guess"));

    let out = guess(&mut hub, b, &g, "0", "SPACE OPERA", 2_000);
    let end = ServerMessage::RoundEnd {
        outcome: RoundEndOutcome::Match,
        term: Some("space opera".into()),
        points_delta: 100,
    };
    assert_eq!(to(&out, a)[0], end);
    assert_eq!(to(&out, b)[1], end);
    assert!(matches!(&to(&out, a)[1], ServerMessage::RoundStart { round_id, .. } if round_id == "1"));
    assert_eq!(hub.session(&g).unwrap().points(), 100);
    // the old round is closed
    assert_eq!(error_code(&guess(&mut hub, a, &g, "0", "late", 2_100)).as_deref(), Some("stale_round"));
    assert_eq!(error_code(&guess(&mut hub, a, "g99", "1", "x", 2_100)).as_deref(), Some("unknown_game"));
}

#[test]
fn acked_guesses_are_already_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let (a, _, g) = paired(&mut hub);
    guess(&mut hub, a, &g, "0", "heist", 500);
    let log = hub.store().read_all().unwrap();
    assert!(log
        .records
        .iter()
        .any(|r| matches!(r, LogRecord::Guess(e) if e.term == "heist" && e.player_id == "ann")));
}

#[test]
fn skips_need_both_players() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let (a, b, g) = paired(&mut hub);
    let out = skip(&mut hub, a, &g, "0", 100);
    assert_eq!(to(&out, a), vec![ServerMessage::SkipPending]);
    assert_eq!(to(&out, b), vec![ServerMessage::SkipPending]);
    assert_eq!(current_round(&hub, &g), "0");
    let out = skip(&mut hub, b, &g, "0", 200);
    assert_eq!(
        to(&out, b)[0],
        ServerMessage::RoundEnd {
            outcome: RoundEndOutcome::Skipped,
            term: None,
            points_delta: -20
        }
    );
    assert_eq!(current_round(&hub, &g), "1");
    assert_eq!(hub.session(&g).unwrap().points(), -20);
}

#[test]
fn time_up_ends_the_game() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let (a, b, g) = paired(&mut hub);
    guess(&mut hub, a, &g, "0", "noir", 1_000);
    guess(&mut hub, b, &g, "0", "noir", 1_500);
    assert!(hub.tick(179_999).is_empty());
    assert_eq!(error_code(&guess(&mut hub, a, &g, "1", "x", 180_000)).as_deref(), Some("game_over"));
    let out = hub.tick(180_000);
    for c in [a, b] {
        assert_eq!(
            to(&out, c),
            vec![
                ServerMessage::RoundEnd {
                    outcome: RoundEndOutcome::Expired,
                    term: None,
                    points_delta: 0
                },
                ServerMessage::GameEnd {
                    total_points: 100,
                    match_count: 1,
                    reason: GameEndReason::Time
                },
            ]
        );
    }
    assert_eq!(hub.active_games(), 0);
    let board = hub.leaderboard(10);
    assert_eq!(board.len(), 2);
    assert!(board.iter().all(|p| p.total_points == 100 && p.games_played == 1));
    // both may queue again
    join(&mut hub, a, "ann", 200_000);
    assert!(matches!(to(&join(&mut hub, b, "bob", 200_001), b)[1], ServerMessage::GameStart { .. }));
}

#[test]
fn disconnect_ends_game_for_partner() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let (a, b, _) = paired(&mut hub);
    let out = hub.disconnect(a, 9_000);
    assert!(to(&out, a).is_empty());
    assert_eq!(
        to(&out, b).last(),
        Some(&ServerMessage::GameEnd {
            total_points: 0,
            match_count: 0,
            reason: GameEndReason::PartnerLeft
        })
    );
    assert_eq!(hub.active_games(), 0);
    // a queued player who disconnects leaves the queue
    let c = hub.connect();
    join(&mut hub, c, "cat", 10_000);
    hub.disconnect(c, 10_001);
    assert_eq!(hub.queue_len(), 0);
}

#[test]
fn every_factor_is_served_without_back_to_back_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 10);
    let (a, b, g) = paired(&mut hub);
    for n in 0..200 {
        let r = current_round(&hub, &g);
        skip(&mut hub, a, &g, &r, n);
        skip(&mut hub, b, &g, &r, n);
    }
    let factors: Vec<usize> = hub.session(&g).unwrap().rounds().iter().map(|r| r.factor_id).collect();
    assert_eq!(factors.iter().collect::<BTreeSet<_>>().len(), 10);
    assert!(factors.windows(2).all(|w| w[0] != w[1]));
}

#[test]
fn new_content_only_affects_new_games() {
    let dir = tempfile::tempdir().unwrap();
    let mut hub = hub_in(dir.path(), 3);
    let (_, _, g) = paired(&mut hub);
    let old = hub.session(&g).unwrap().representatives().clone();
    hub.install_snapshot(common::snapshot(2, 5, 4));
    assert!(Arc::ptr_eq(hub.session(&g).unwrap().representatives(), &old));
    let (c, d) = (hub.connect(), hub.connect());
    join(&mut hub, c, "cat", 1);
    join(&mut hub, d, "dan", 1);
    assert_eq!(hub.session("g1").unwrap().representatives().factor_count(), 5);
    assert_eq!(hub.snapshot().version, 2);
}

#[test]
fn restart_restores_leaderboard_and_game_ids() {
    let dir = tempfile::tempdir().unwrap();
    {
        let mut hub = hub_in(dir.path(), 3);
        let (a, b, g) = paired(&mut hub);
        guess(&mut hub, a, &g, "0", "x", 1);
        guess(&mut hub, b, &g, "0", "x", 2);
        hub.tick(180_000);
    }
    let mut hub = hub_in(dir.path(), 3);
    assert_eq!(hub.leaderboard(10).len(), 2);
    let (_, _, g) = paired(&mut hub);
    assert_eq!(g, "g1");
}
