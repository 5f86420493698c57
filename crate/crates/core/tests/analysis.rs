use std::collections::BTreeMap;

use lfg_core::analysis::{aggregate, build_vectors, filter_good_labels, report, AnalysisConfig};
use lfg_core::log::{read_log, write_log, LogRecord, MatchRecord};
use lfg_core::study::{study_log, STUDY_FACTORS};
use proptest::prelude::*;

#[test]
fn study_log_reproduces_published_counts() {
    let agg = aggregate(&study_log());
    assert_eq!(agg.total_guesses, 5741);
    assert_eq!(agg.total_matches, 545);
    assert_eq!(agg.players.len(), 84);
    assert_eq!(agg.games.len(), 173);
    for (tally, published) in agg.factors.iter().zip(&STUDY_FACTORS) {
        assert_eq!(tally.guesses, published.guesses);
        assert_eq!(tally.matches, published.matches);
    }
    // factor 9 of the study is id 8
    assert_eq!((agg.factors[8].guesses, agg.factors[8].matches), (754, 66));
    // factor 8 of the study, "love"
    assert_eq!(agg.factors[7].term_matches["love"], 12);
}

#[test]
fn good_labels_leave_35_terms_and_325_matches() {
    let descs = filter_good_labels(&aggregate(&study_log()), 2).unwrap();
    let distinct: std::collections::BTreeSet<&String> = descs.iter().flat_map(|d| d.term_counts.keys()).collect();
    assert_eq!(distinct.len(), 35);
    assert_eq!(descs.iter().map(|d| d.total()).sum::<u64>(), 325);
    for (d, published) in descs.iter().zip(&STUDY_FACTORS) {
        let want: BTreeMap<String, u64> = published.terms.iter().map(|(t, c)| (t.to_string(), *c)).collect();
        assert_eq!(d.term_counts, want);
    }
}

#[test]
fn factor_8_weights_match_recomputation() {
    let descs = filter_good_labels(&aggregate(&study_log()), 2).unwrap();
    let space = build_vectors(&descs).unwrap();
    // recompute from the published term lists alone
    let df = |term: &str| STUDY_FACTORS.iter().filter(|f| f.terms.iter().any(|(t, _)| *t == term)).count() as f64;
    for (term, count) in STUDY_FACTORS[7].terms {
        let want = *count as f64 * (10.0 / df(term)).ln();
        let pos = space.dictionary.iter().position(|t| t == term).unwrap();
        assert!((space.vectors[7][pos] - want).abs() < 1e-12, "{term}");
    }
    // frozen spot values: love 12 * ln(10/5), family 3 * ln(10/2)
    let pos = |t: &str| space.dictionary.iter().position(|x| x == t).unwrap();
    assert!((space.vectors[7][pos("love")] - 8.317_766).abs() < 1e-6);
    assert!((space.vectors[7][pos("family")] - 4.828_314).abs() < 1e-6);
    // universal terms carry no weight
    assert!(space.vectors.iter().all(|v| v[pos("action")] == 0.0 && v[pos("comedy")] == 0.0));
}

#[test]
fn study_similarity_and_ratios() {
    let rep = report(&study_log(), &AnalysisConfig::default()).unwrap();
    let sim = &rep.similarity;
    assert!((sim[7][9] - 0.54).abs() <= 0.02, "{}", sim[7][9]);
    let max = rep.pairs().into_iter().max_by(|a, b| a.2.partial_cmp(&b.2).unwrap()).unwrap();
    assert_eq!((max.0, max.1), (7, 9));
    assert!((rep.mean_similarity.unwrap() - 0.09).abs() <= 0.04);
    assert!((rep.sd_similarity.unwrap() - 0.13).abs() <= 0.01);
    assert_eq!(format!("{:.2}", rep.factors[5].guess_match_ratio.unwrap()), "8.92");
    assert_eq!(format!("{:.2}", rep.expected_contribution_guesses.unwrap()), "68.35");
    assert_eq!(format!("{:.2}", rep.expected_contribution_matches.unwrap()), "6.49");
    for i in 0..10 {
        assert!((sim[i][i] - 1.0).abs() < 1e-12);
        for j in 0..10 {
            assert_eq!(sim[i][j], sim[j][i]);
            assert!((0.0..=1.0 + 1e-12).contains(&sim[i][j]));
        }
    }
    for f in &rep.factors {
        let ratio = f.guess_match_ratio.unwrap();
        assert!((ratio * f.matches as f64 - f.guesses as f64).abs() < 1e-9);
    }
}

#[test]
fn report_survives_reserialization() {
    let log = study_log();
    let mut buf = Vec::new();
    write_log(&mut buf, &log).unwrap();
    let reloaded = read_log(buf.as_slice()).unwrap();
    assert_eq!(reloaded.corrupt, 0);
    let cfg = AnalysisConfig::default();
    assert_eq!(report(&log, &cfg).unwrap(), report(&reloaded.records, &cfg).unwrap());
}

fn arb_matches() -> impl Strategy<Value = Vec<LogRecord>> {
    proptest::collection::vec((0usize..5, prop::sample::select(vec!["a", "b", "c", "d", "e", "f"])), 0..120).prop_map(|v| {
        v.into_iter()
            .map(|(factor_id, term)| {
                LogRecord::Match(MatchRecord {
                    game_id: "g".into(),
                    round_id: 0,
                    factor_id,
                    term: term.into(),
                    timestamp: 0,
                })
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn raising_threshold_only_shrinks(log in arb_matches(), x in 1u64..6) {
        let agg = aggregate(&log);
        let lo = filter_good_labels(&agg, x).unwrap();
        let hi = filter_good_labels(&agg, x + 1).unwrap();
        let distinct = |d: &[lfg_core::analysis::FactorDescription]| {
            d.iter().flat_map(|f| f.term_counts.keys().cloned()).collect::<std::collections::BTreeSet<_>>().len()
        };
        prop_assert!(distinct(&hi) <= distinct(&lo));
        prop_assert!(hi.iter().map(|d| d.total()).sum::<u64>() <= lo.iter().map(|d| d.total()).sum::<u64>());
        for (h, l) in hi.iter().zip(&lo) {
            for (t, c) in &h.term_counts {
                prop_assert!(*c >= x + 1);
                prop_assert_eq!(l.term_counts.get(t), Some(c));
            }
        }
    }

    #[test]
    fn similarity_matrix_properties(log in arb_matches()) {
        let rep = report(&log, &AnalysisConfig { good_label_threshold: 1 }).unwrap();
        let n = rep.similarity.len();
        let descs = filter_good_labels(&aggregate(&log), 1).unwrap();
        let vectors = build_vectors(&descs).ok();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((rep.similarity[i][j] - rep.similarity[j][i]).abs() < 1e-12);
                prop_assert!(rep.similarity[i][j] >= 0.0 && rep.similarity[i][j] <= 1.0 + 1e-12);
            }
            if let Some(v) = &vectors {
                if v.vectors[i].iter().any(|w| *w != 0.0) {
                    prop_assert!((rep.similarity[i][i] - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn universal_terms_do_not_change_similarity(log in arb_matches()) {
        let cfg = AnalysisConfig { good_label_threshold: 1 };
        let base = report(&log, &cfg).unwrap();
        let described: Vec<usize> = (0..base.factors.len()).filter(|&f| !base.factors[f].terms.is_empty()).collect();
        let mut extended = log.clone();
        for &f in &described {
            for _ in 0..3 {
                extended.push(LogRecord::Match(MatchRecord {
                    game_id: "g".into(),
                    round_id: 0,
                    factor_id: f,
                    term: "everywhere".into(),
                    timestamp: 0,
                }));
            }
        }
        let with = report(&extended, &cfg).unwrap();
        for i in 0..base.similarity.len() {
            for j in 0..base.similarity.len() {
                prop_assert!((base.similarity[i][j] - with.similarity[i][j]).abs() < 1e-9);
            }
        }
    }
}
