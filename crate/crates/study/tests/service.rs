mod common;

use std::collections::HashSet;
use std::io::Write;
use std::sync::Arc;

use inpaint_eval_core::judgements::{
    filter_valid_sessions, fit_study, read_judgements, read_verification_key, BtConfig, Side,
};
use inpaint_eval_study::{read_events, NextPair, Study, StudyError, StudyState};

fn current(study: &Study, id: &str) -> inpaint_eval_study::PairView {
    match study.next_pair(id).unwrap() {
        NextPair::Pair(p) => p,
        NextPair::Done { .. } => panic!("session already done"),
    }
}

/// Answers every remaining pair of a session, picking ground truth on
/// verification pairs when `honest`.
fn complete(study: &Study, id: &str, honest: bool) {
    loop {
        let p = match study.next_pair(id).unwrap() {
            NextPair::Pair(p) => p,
            NextPair::Done { .. } => return,
        };
        let correct = study.with_state(|s| s.assignment(&p.pair_id).unwrap().correct_side);
        let chosen = match correct {
            Some(side) if honest => side,
            Some(side) => side.flip(),
            None => {
                if p.index % 2 == 0 {
                    Side::Left
                } else {
                    Side::Right
                }
            }
        };
        study.record_choice(id, &p.pair_id, chosen).unwrap();
    }
}

#[test]
fn schedule_length_and_balance_after_two_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset(&dir.path().join("data"), 3);
    let study = Study::open(cfg, dir.path().join("log.jsonl"), Some(1)).unwrap();
    for _ in 0..2 {
        let created = study.create_session().unwrap();
        assert_eq!(created.total_pairs, 24);
        let session = study.with_state(|s| s.session(&created.session_id).unwrap().clone());
        assert_eq!(session.schedule.iter().filter(|p| p.is_verification).count(), 2);
    }
    let counts: Vec<u64> = study.presentation_counts().into_iter().map(|(_, n)| n).collect();
    // 3 images x C(4,2) combos, 44 regular presentations.
    assert_eq!(counts.len(), 18);
    assert_eq!(counts.iter().sum::<u64>(), 44);
    assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
}

#[test]
fn choice_flow_and_idempotency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset(&dir.path().join("data"), 2);
    let study = Study::open(cfg, dir.path().join("log.jsonl"), Some(2)).unwrap();
    let id = study.create_session().unwrap().session_id;

    let first = current(&study, &id);
    assert_eq!(first.index, 0);
    assert_eq!(first.total, 24);
    assert_eq!(current(&study, &id), first);

    let ack = study.record_choice(&id, &first.pair_id, Side::Right).unwrap();
    assert_eq!((ack.index, ack.done), (1, false));
    let (j, assignment) =
        study.with_state(|s| (s.judgements()[0].clone(), s.assignment(&first.pair_id).unwrap().clone()));
    assert_eq!(j.session_id, id);
    assert_eq!(j.image_id, assignment.image_id);
    assert_eq!(j.left_variant, assignment.left_variant);
    assert_eq!(j.right_variant, assignment.right_variant);
    assert_eq!(j.is_verification, assignment.is_verification);
    assert_eq!(j.chosen, Side::Right);

    assert!(matches!(
        study.record_choice(&id, &first.pair_id, Side::Left),
        Err(StudyError::AlreadyAnswered { .. })
    ));
    assert_eq!(study.with_state(|s| s.judgements().len()), 1);

    let later = study.with_state(|s| s.session(&id).unwrap().schedule[5].pair_id.clone());
    assert!(matches!(
        study.record_choice(&id, &later, Side::Left),
        Err(StudyError::PairMismatch { .. })
    ));
    assert!(matches!(
        study.record_choice(&id, "nope", Side::Left),
        Err(StudyError::PairMismatch { .. })
    ));
    assert!(matches!(
        study.record_choice("ghost", &first.pair_id, Side::Left),
        Err(StudyError::UnknownSession(_))
    ));
    assert!(matches!(study.next_pair("ghost"), Err(StudyError::UnknownSession(_))));
    assert_eq!(current(&study, &id).index, 1);

    complete(&study, &id, true);
    assert_eq!(study.next_pair(&id).unwrap(), NextPair::Done { done: true });
    assert!(study.with_state(|s| s.session(&id).unwrap().completed));
    assert_eq!(study.with_state(|s| s.judgements().len()), 24);
}

#[test]
fn empty_study_exports_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset(&dir.path().join("data"), 1);
    let study = Study::open(cfg, dir.path().join("log.jsonl"), None).unwrap();
    let csv = study.with_state(|s| s.judgements_csv()).unwrap();
    assert_eq!(
        String::from_utf8(csv).unwrap(),
        "session_id,image_id,left_variant,right_variant,chosen,is_verification,timestamp\n"
    );
    let key = study.with_state(|s| s.verification_key_csv()).unwrap();
    assert_eq!(
        String::from_utf8(key).unwrap(),
        "image_id,variant_a,variant_b,correct_variant\n"
    );
}

#[test]
fn restart_replays_identical_state_and_continues_the_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset(&dir.path().join("data"), 3);

    let straight = Study::open(cfg.clone(), dir.path().join("a.jsonl"), Some(42)).unwrap();
    let straight_ids: Vec<String> = (0..3).map(|_| straight.create_session().unwrap().session_id).collect();

    let log = dir.path().join("b.jsonl");
    let (ids, judgements, counts) = {
        let study = Study::open(cfg.clone(), &log, Some(42)).unwrap();
        let a = study.create_session().unwrap().session_id;
        let b = study.create_session().unwrap().session_id;
        complete(&study, &a, true);
        for _ in 0..5 {
            let p = current(&study, &b);
            study.record_choice(&b, &p.pair_id, Side::Left).unwrap();
        }
        (
            vec![a, b],
            study.with_state(|s| s.judgements().to_vec()),
            study.presentation_counts(),
        )
    };

    let study = Study::open(cfg, &log, Some(42)).unwrap();
    assert_eq!(study.with_state(|s| s.judgements().to_vec()), judgements);
    assert_eq!(study.presentation_counts(), counts);
    assert_eq!(current(&study, &ids[1]).index, 5);
    assert_eq!(study.next_pair(&ids[0]).unwrap(), NextPair::Done { done: true });
    let c = study.create_session().unwrap().session_id;
    assert_eq!([ids[0].clone(), ids[1].clone(), c], straight_ids[..]);
}

#[test]
fn torn_tail_is_dropped_and_appends_continue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset(&dir.path().join("data"), 2);
    let log = dir.path().join("log.jsonl");
    let id = {
        let study = Study::open(cfg.clone(), &log, Some(3)).unwrap();
        let id = study.create_session().unwrap().session_id;
        let p = current(&study, &id);
        study.record_choice(&id, &p.pair_id, Side::Left).unwrap();
        id
    };
    let mut f = std::fs::OpenOptions::new().append(true).open(&log).unwrap();
    f.write_all(br#"{"event":"choice_recorded","session_id":"#).unwrap();
    drop(f);
    assert_eq!(read_events(&log).unwrap().len(), 2);

    let study = Study::open(cfg, &log, Some(3)).unwrap();
    assert_eq!(study.with_state(|s| s.judgements().len()), 1);
    let p = current(&study, &id);
    study.record_choice(&id, &p.pair_id, Side::Right).unwrap();
    let state = StudyState::from_events(read_events(&log).unwrap()).unwrap();
    assert_eq!(state.judgements().len(), 2);
}

#[test]
fn corrupt_line_refuses_to_open() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset(&dir.path().join("data"), 1);
    let log = dir.path().join("log.jsonl");
    std::fs::write(&log, "not json\n").unwrap();
    assert!(matches!(
        Study::open(cfg, &log, None),
        Err(StudyError::CorruptLog { line: 1, .. })
    ));
}

#[test]
fn concurrent_sessions_and_duplicate_submissions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset(&dir.path().join("data"), 3);
    let log = dir.path().join("log.jsonl");
    let study = Arc::new(Study::open(cfg.clone(), &log, Some(11)).unwrap());
    let threads = 8;
    std::thread::scope(|s| {
        for t in 0..threads {
            let study = Arc::clone(&study);
            s.spawn(move || {
                let id = study.create_session().unwrap().session_id;
                loop {
                    let p = match study.next_pair(&id).unwrap() {
                        NextPair::Pair(p) => p,
                        NextPair::Done { .. } => break,
                    };
                    // Two racing submissions of the same pair: exactly one wins.
                    let results: Vec<_> = std::thread::scope(|inner| {
                        let hs: Vec<_> = (0..2)
                            .map(|_| {
                                let study = &study;
                                let (id, pid) = (&id, &p.pair_id);
                                inner.spawn(move || {
                                    study.record_choice(id, pid, if t % 2 == 0 { Side::Left } else { Side::Right })
                                })
                            })
                            .collect();
                        hs.into_iter().map(|h| h.join().unwrap()).collect()
                    });
                    assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 1);
                }
            });
        }
    });
    let judgements = study.with_state(|s| s.judgements().to_vec());
    assert_eq!(judgements.len(), threads * 24);
    let mut seen = HashSet::new();
    for s in study.with_state(|s| s.sessions().to_vec()) {
        assert!(s.completed);
        for p in &s.schedule {
            assert!(seen.insert((s.session_id.clone(), p.pair_id.clone())));
        }
    }
    let counts: Vec<u64> = study.presentation_counts().into_iter().map(|(_, n)| n).collect();
    assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
    drop(study);
    let replayed = Study::open(cfg, &log, None).unwrap();
    assert_eq!(replayed.with_state(|s| s.judgements().to_vec()), judgements);
}

#[test]
fn export_of_147_sessions_feeds_filter_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::dataset_with(&dir.path().join("data"), 3, 25, 2);
    let study = Study::open(cfg, dir.path().join("log.jsonl"), Some(147)).unwrap();
    for i in 0..147 {
        let id = study.create_session().unwrap().session_id;
        complete(&study, &id, i % 10 != 0);
    }
    let csv = study.with_state(|s| s.judgements_csv()).unwrap();
    let judgements = read_judgements(csv.as_slice()).unwrap();
    assert_eq!(judgements.len(), 3969);
    let key = read_verification_key(study.with_state(|s| s.verification_key_csv()).unwrap().as_slice()).unwrap();
    assert!(!key.is_empty());

    let outcome = filter_valid_sessions(&judgements, &key).unwrap();
    assert_eq!(outcome.excluded_sessions.len(), 15);
    assert_eq!(outcome.passing_sessions, 132);
    assert_eq!(outcome.valid.len(), 132 * 25);
    let report = fit_study(&judgements, &key, &BtConfig::default()).unwrap();
    assert_eq!(report.tables.len(), 3);
    assert!(report.failures.is_empty());
}
