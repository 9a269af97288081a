use std::path::PathBuf;

use proctrack_core::qaformat::{build_instances, export_instances, QaInstance, QaKind};
use proctrack_core::{jsonl, Corpus, StateVocabulary};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn hydropower() -> Corpus {
    Corpus::load(&fixture("hydropower.jsonl"), &StateVocabulary::propara()).unwrap()
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

#[test]
fn state_instance_matches_fixture_bytes() {
    let all = build_instances(&hydropower(), &StateVocabulary::propara(), &[QaKind::State]).unwrap();
    let q = all.iter().find(|q| q.entity_id == "water" && q.step == 2).unwrap();
    assert_eq!(q.input, read("hydropower_state_water_2.input.txt"));
    assert_eq!(q.target, read("hydropower_state_water_2.target.txt"));
}

#[test]
fn location_instance_matches_fixture_bytes() {
    let all = build_instances(&hydropower(), &StateVocabulary::propara(), &[QaKind::Location]).unwrap();
    let q = all.iter().find(|q| q.entity_id == "water" && q.step == 2).unwrap();
    assert_eq!(q.input, read("hydropower_location_water_2.input.txt"));
    assert_eq!(q.target, read("hydropower_location_water_2.target.txt"));
}

#[test]
fn per_entity_counts() {
    let corpus = hydropower();
    let vocab = StateVocabulary::propara();
    let both = build_instances(&corpus, &vocab, &[QaKind::State, QaKind::Location]).unwrap();
    let water: Vec<&QaInstance> = both.iter().filter(|q| q.entity_id == "water").collect();
    assert_eq!(water.iter().filter(|q| q.kind == QaKind::State).count(), 6);
    assert_eq!(water.iter().filter(|q| q.kind == QaKind::Location).count(), 7);
    // entities x (2T + 1)
    assert_eq!(both.len(), 2 * (2 * 6 + 1));
}

#[test]
fn targets_follow_gold() {
    let corpus = hydropower();
    let vocab = StateVocabulary::propara();
    let all = build_instances(&corpus, &vocab, &[QaKind::State, QaKind::Location]).unwrap();
    let elec: Vec<(usize, QaKind, &str)> = all
        .iter()
        .filter(|q| q.entity_id == "electricity")
        .map(|q| (q.step, q.kind, q.target.as_str()))
        .collect();
    assert!(elec.contains(&(0, QaKind::Location, "none")));
    assert!(elec.contains(&(5, QaKind::State, "create")));
    assert!(elec.contains(&(5, QaKind::Location, "generator")));
    let water_0 = all.iter().find(|q| q.entity_id == "water" && q.step == 0).unwrap();
    assert_eq!(water_0.target, "unknown");
}

#[test]
fn export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qa.jsonl");
    let n = export_instances(&hydropower(), &StateVocabulary::propara(), &[QaKind::State, QaKind::Location], &out)
        .unwrap();
    let back: Vec<(usize, QaInstance)> = jsonl::read(&out).unwrap();
    assert_eq!(back.len(), n);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().starts_with(r#"{"procedure_id":"hydropower","entity_id":"electricity","step":0,"kind":"location""#));
}

#[test]
fn synthetic_corpus_counts() {
    let corpus = proctrack_core::harness::synth_corpus(20, 3).unwrap();
    let expected: usize = corpus
        .procedures
        .iter()
        .map(|p| p.entities.len() * (2 * p.num_steps() + 1))
        .sum();
    let n = build_instances(&corpus, &StateVocabulary::propara(), &[QaKind::State, QaKind::Location])
        .unwrap()
        .len();
    assert_eq!(n, expected);
}
