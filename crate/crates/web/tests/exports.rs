use lfg_web::{analyze_study, explore_representatives, HotSeatGame};
use serde_json::Value;

#[test]
fn study_analysis_reports_published_shape() {
    let rep: Value = serde_json::from_str(&analyze_study(2).unwrap()).unwrap();
    assert_eq!(rep["distinct_terms"], 35);
    assert_eq!(rep["surviving_matches"], 325);
    let loose: Value = serde_json::from_str(&analyze_study(1).unwrap()).unwrap();
    assert!(loose["distinct_terms"].as_u64().unwrap() > 35);
}

#[test]
fn explorer_honours_set_size_and_weights() {
    let reps: Value = serde_json::from_str(&explore_representatives(0.4, 0.3, 0.3, 0.75, 4).unwrap()).unwrap();
    let factors = reps["factors"].as_array().unwrap();
    assert_eq!(factors.len(), 3);
    assert!(factors.iter().all(|f| f["entries"].as_array().unwrap().len() <= 4));
    let pop_only: Value = serde_json::from_str(&explore_representatives(1.0, 0.0, 0.0, 0.75, 25).unwrap()).unwrap();
    for f in pop_only["factors"].as_array().unwrap() {
        let scores: Vec<f64> = f["entries"].as_array().unwrap().iter().map(|e| e["popularity"].as_f64().unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn hot_seat_round_trip() {
    let mut game = HotSeatGame::new(3, 180, 0.0).unwrap();
    let first: Value = serde_json::from_str(&game.guess(0, "Western", 10.0).unwrap()).unwrap();
    assert_eq!(first["result"], "recorded");
    let second: Value = serde_json::from_str(&game.guess(1, "western ", 20.0).unwrap()).unwrap();
    assert_eq!(second["result"], "matched");
    let skip: Value = serde_json::from_str(&game.skip(0, 30.0).unwrap()).unwrap();
    assert_eq!(skip["result"], "pending");
    assert!(!game.tick(179_999.0));
    assert!(game.tick(180_000.0));
    let state: Value = serde_json::from_str(&game.state()).unwrap();
    assert_eq!(state["points"], 100);
    assert_eq!(state["finished"], true);
    assert_eq!(state["history"][0]["term"], "western");
}
