use proptest::prelude::*;

use proctrack_core::evaluator::{
    eval_document_level, eval_recipes_locations, eval_sentence_level, evaluate, evaluate_per_procedure, GridMap,
    Prf, Ratio,
};
use proctrack_core::harness::synth_corpus;
use proctrack_core::{AnnotationGrid, LocationValue, StateVocabulary, Track};

fn track(vocab: &StateVocabulary, states: &[&str], locations: &[&str]) -> Track {
    Track {
        states: states.iter().map(|s| vocab.require(s).unwrap()).collect(),
        locations: locations.iter().map(|l| LocationValue::from_grid(l)).collect(),
    }
}

fn grids(pid: &str, entries: Vec<(&str, Track)>) -> GridMap {
    let mut g = AnnotationGrid::new(pid);
    for (eid, t) in entries {
        g.entries.insert(eid.to_string(), t);
    }
    GridMap::from([(pid.to_string(), g)])
}

fn a_gold(v: &StateVocabulary) -> Track {
    track(v, &["exist", "destroy", "outside_after"], &["soil", "soil", "-", "-"])
}

fn b_gold(v: &StateVocabulary) -> Track {
    track(v, &["outside_before", "create", "exist"], &["-", "-", "soil", "soil"])
}

fn c_gold(v: &StateVocabulary) -> Track {
    track(v, &["exist", "exist", "move"], &["pond", "pond", "pond", "river"])
}

/// A is destroyed at step 2 in the soil where B is created; C moves from
/// the pond to the river at step 3.
///
/// inputs {A}, outputs {B}, conversions {(2, A, B, soil)},
/// moves {(C, 3, pond, river)}.
fn gold(v: &StateVocabulary) -> GridMap {
    grids("p", vec![("A", a_gold(v)), ("B", b_gold(v)), ("C", c_gold(v))])
}

fn prf(matched: usize, predicted: usize, gold: usize) -> Prf {
    Prf { matched, predicted, gold }
}

#[test]
fn identity_scores_one() {
    let v = StateVocabulary::propara();
    let g = gold(&v);
    let d = eval_document_level(&g, &g, &v).unwrap();
    assert_eq!(d.inputs, prf(1, 1, 1));
    assert_eq!(d.outputs, prf(1, 1, 1));
    assert_eq!(d.conversions, prf(1, 1, 1));
    assert_eq!(d.moves, prf(1, 1, 1));
    assert_eq!((d.macro_precision(), d.macro_recall(), d.macro_f1()), (1.0, 1.0, 1.0));
    let s = eval_sentence_level(&g, &g, &v).unwrap();
    // 3 entities x 3 events; 3 of them happen in gold
    assert_eq!(s.cat1, Ratio { correct: 9, total: 9 });
    assert_eq!(s.cat2, Ratio { correct: 3, total: 3 });
    assert_eq!(s.cat3, Ratio { correct: 3, total: 3 });
}

#[test]
fn move_at_the_wrong_step() {
    let v = StateVocabulary::propara();
    let g = gold(&v);
    let c = track(&v, &["exist", "move", "exist"], &["pond", "pond", "river", "river"]);
    let p = grids("p", vec![("A", a_gold(&v)), ("B", b_gold(&v)), ("C", c)]);
    let d = eval_document_level(&g, &p, &v).unwrap();
    assert_eq!(d.moves, prf(0, 1, 1));
    assert_eq!(d.moves.f1(), 0.0);
    assert_eq!(d.macro_f1(), 0.75);
    let s = eval_sentence_level(&g, &p, &v).unwrap();
    assert_eq!(s.cat1, Ratio { correct: 9, total: 9 });
    assert_eq!(s.cat2, Ratio { correct: 2, total: 3 });
    assert_eq!(s.cat3, Ratio { correct: 2, total: 3 });
    assert_eq!(s.micro_avg(), 13.0 / 15.0);
}

#[test]
fn move_to_the_wrong_place() {
    let v = StateVocabulary::propara();
    let g = gold(&v);
    let c = track(&v, &["exist", "exist", "move"], &["pond", "pond", "pond", "lake"]);
    let p = grids("p", vec![("A", a_gold(&v)), ("B", b_gold(&v)), ("C", c)]);
    let s = eval_sentence_level(&g, &p, &v).unwrap();
    assert_eq!(s.cat2, Ratio { correct: 3, total: 3 });
    assert_eq!(s.cat3, Ratio { correct: 2, total: 3 });
}

#[test]
fn predictor_without_events() {
    let v = StateVocabulary::propara();
    let g = gold(&v);
    let idle = || track(&v, &["exist"; 3], &["?"; 4]);
    let p = grids("p", vec![("A", idle()), ("B", idle()), ("C", idle())]);
    let d = eval_document_level(&g, &p, &v).unwrap();
    for (_, q) in d.questions() {
        assert_eq!(q, prf(0, 0, 1));
        assert_eq!((q.precision(), q.recall(), q.f1()), (1.0, 0.0, 0.0));
    }
    assert_eq!(d.macro_f1(), 0.0);
    let s = eval_sentence_level(&g, &p, &v).unwrap();
    assert_eq!(s.cat1, Ratio { correct: 6, total: 9 });
    assert_eq!(s.cat2, Ratio { correct: 0, total: 3 });
    assert_eq!(s.cat3, Ratio { correct: 0, total: 3 });
}

#[test]
fn missing_entity_counts_as_empty() {
    let v = StateVocabulary::propara();
    let g = gold(&v);
    let p = grids("p", vec![("A", a_gold(&v)), ("B", b_gold(&v))]);
    let d = eval_document_level(&g, &p, &v).unwrap();
    assert_eq!(d.moves, prf(0, 0, 1));
    assert_eq!((d.moves.precision(), d.moves.recall(), d.moves.f1()), (1.0, 0.0, 0.0));
    assert_eq!(d.macro_f1(), 0.75);
}

#[test]
fn predictions_outside_gold_are_rejected() {
    let v = StateVocabulary::propara();
    let g = gold(&v);
    let mut p = g.clone();
    p.get_mut("p").unwrap().entries.insert("D".into(), c_gold(&v));
    assert!(evaluate(&g, &p, &v).is_err());
    let short = grids("p", vec![("A", track(&v, &["exist"], &["soil", "soil"]))]);
    assert!(evaluate(&g, &short, &v).is_err());
}

/// Egg: bowl at 1, pan at 2, plate at 4. Flour: bowl at 2, gone at 4.
/// The prediction puts the flour in the oven at 4: 4 of 5 changes match.
#[test]
fn presence_vocabulary_location_changes() {
    let v = StateVocabulary::recipes();
    let egg = track(&v, &["exist"; 4], &["-", "bowl", "pan", "pan", "plate"]);
    let flour = track(&v, &["absence", "exist", "exist", "absence"], &["-", "-", "bowl", "bowl", "-"]);
    let flour_pred = track(&v, &["absence", "exist", "exist", "exist"], &["-", "-", "bowl", "bowl", "oven"]);
    let g = grids("r", vec![("egg", egg.clone()), ("flour", flour)]);
    let p = grids("r", vec![("egg", egg), ("flour", flour_pred)]);
    let q = eval_recipes_locations(&g, &p, &v).unwrap();
    assert_eq!(q, prf(4, 5, 5));
    assert!((q.precision() - 0.8).abs() < 1e-12);
    assert!((q.recall() - 0.8).abs() < 1e-12);
    assert!((q.f1() - 0.8).abs() < 1e-12);
    let report = evaluate(&g, &p, &v).unwrap();
    assert!(report.doc_level.is_none());
    assert_eq!(report.recipes_location, Some(q));
    assert!(eval_recipes_locations(&g, &p, &StateVocabulary::propara()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn synthetic_gold_scores_perfectly(seed in any::<u64>()) {
        let v = StateVocabulary::propara();
        let c = synth_corpus(10, seed).unwrap();
        let r = evaluate(&c.gold, &c.gold, &v).unwrap();
        prop_assert_eq!(r.doc_level.unwrap().macro_f1(), 1.0);
        let s = r.sentence_level.unwrap();
        prop_assert_eq!(s.macro_avg(), 1.0);
        prop_assert_eq!(r.prediction_violations, 0);
    }

    #[test]
    fn subsets_of_gold_keep_full_precision(seed in any::<u64>(), keep in prop::collection::vec(any::<bool>(), 64)) {
        let v = StateVocabulary::propara();
        let c = synth_corpus(8, seed).unwrap();
        let mut pred = c.gold.clone();
        let mut i = 0;
        for g in pred.values_mut() {
            g.entries.retain(|_, _| { i += 1; keep[i % keep.len()] });
        }
        let d = eval_document_level(&c.gold, &pred, &v).unwrap();
        for (_, q) in d.questions() {
            prop_assert_eq!(q.precision(), 1.0);
        }
    }

    #[test]
    fn per_procedure_counts_add_up(seed in any::<u64>()) {
        let v = StateVocabulary::propara();
        let c = synth_corpus(6, seed).unwrap();
        // reversed state sequences make a poor but well-formed prediction
        let mut pred = c.gold.clone();
        for g in pred.values_mut() {
            for t in g.entries.values_mut() {
                t.states.reverse();
            }
        }
        let total = eval_document_level(&c.gold, &pred, &v).unwrap();
        let parts = evaluate_per_procedure(&c.gold, &pred, &v).unwrap();
        let mut sum = [Prf::default(); 4];
        for r in parts.values() {
            for (k, (_, q)) in r.doc_level.unwrap().questions().iter().enumerate() {
                sum[k].matched += q.matched;
                sum[k].predicted += q.predicted;
                sum[k].gold += q.gold;
            }
        }
        let want: Vec<Prf> = total.questions().iter().map(|(_, q)| *q).collect();
        prop_assert_eq!(sum.to_vec(), want);
    }
}
