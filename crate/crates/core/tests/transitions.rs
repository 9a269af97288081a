use proptest::prelude::*;

use proctrack_core::transitions::TransitionModel;
use proctrack_core::{StateVocabulary, TransitionModelF32, TransitionModelF64};

fn sequences(labels: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(0..labels, 1..8), 1..30)
}

fn estimate(seqs: &[Vec<usize>], vocab: &StateVocabulary) -> TransitionModelF64 {
    TransitionModel::estimate(seqs.iter().map(Vec::as_slice), vocab).unwrap()
}

proptest! {
    #[test]
    fn rows_are_distributions(seqs in sequences(6)) {
        let vocab = StateVocabulary::propara();
        let m = estimate(&seqs, &vocab);
        let start: f64 = (0..6).map(|y| m.start(y).exp()).sum();
        prop_assert!((start - 1.0).abs() <= 1e-9);
        for p in 0..6 {
            let out: u64 = (0..6).map(|q| m.trans_count(p, q)).sum();
            let mass: f64 = (0..6).map(|q| m.trans(p, q).exp()).sum();
            if out == 0 {
                prop_assert_eq!(mass, 0.0);
            } else {
                prop_assert!((mass - 1.0).abs() <= 1e-9, "row {} sums to {}", p, mass);
            }
        }
    }

    #[test]
    fn order_does_not_matter(seqs in sequences(6), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let vocab = StateVocabulary::propara();
        let mut shuffled = seqs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(estimate(&seqs, &vocab), estimate(&shuffled, &vocab));
    }

    #[test]
    fn training_lengths_stay_decodable(seqs in sequences(2)) {
        let vocab = StateVocabulary::recipes();
        let m = estimate(&seqs, &vocab);
        let longest = seqs.iter().map(Vec::len).max().unwrap();
        for steps in 1..=longest {
            prop_assert!(m.path_exists(steps));
        }
    }

    #[test]
    fn save_load_is_exact(seqs in sequences(6)) {
        let vocab = StateVocabulary::propara();
        let m = estimate(&seqs, &vocab);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        prop_assert_eq!(TransitionModel::load(&path, &vocab).unwrap(), m);
    }
}

#[test]
fn hand_counted_scores() {
    let vocab = StateVocabulary::recipes();
    // starts: 3x s0, 1x s1; transitions 0->0 x2, 0->1 x2, 1->1 x1
    let seqs = vec![vec![0, 0, 1], vec![0, 1, 1], vec![0, 0], vec![1]];
    let m = estimate(&seqs, &vocab);
    assert_eq!(m.sequences(), 4);
    assert!((m.start(0) - 0.75f64.ln()).abs() <= 1e-12);
    assert!((m.start(1) - 0.25f64.ln()).abs() <= 1e-12);
    assert!((m.trans(0, 0) - 0.5f64.ln()).abs() <= 1e-12);
    assert!((m.trans(0, 1) - 0.5f64.ln()).abs() <= 1e-12);
    assert_eq!(m.trans(1, 1), 0.0);
    assert_eq!(m.trans(1, 0), f64::NEG_INFINITY);
}

#[test]
fn single_precision_model() {
    let vocab = StateVocabulary::recipes();
    let m = estimate(&[vec![0, 1], vec![0, 0]], &vocab);
    let f: TransitionModelF32 = m.cast();
    assert_eq!(f.trans(0, 1), 0.5f32.ln());
    assert_eq!(f.trans(1, 0), f32::NEG_INFINITY);
}

#[test]
fn empty_input_is_rejected() {
    let vocab = StateVocabulary::recipes();
    assert!(TransitionModelF64::estimate(std::iter::empty(), &vocab).is_err());
    assert!(TransitionModelF64::estimate([[5usize].as_slice()], &vocab).is_err());
}

#[test]
fn reachability_of_a_single_sequence() {
    let vocab = StateVocabulary::propara();
    let m = estimate(&[vec![vocab.require("create").unwrap(), vocab.require("exist").unwrap()]], &vocab);
    assert!(m.path_exists(1));
    assert!(m.path_exists(2));
    assert!(!m.path_exists(3));
}

#[test]
fn synthetic_propara_model_reaches_ten_steps() {
    let vocab = StateVocabulary::propara();
    let train = proctrack_core::harness::synth_corpus(200, 1).unwrap();
    let m = TransitionModelF64::estimate_from_grids(train.gold.values(), &vocab).unwrap();
    assert!(m.path_exists(10));
    assert!(m.trans(vocab.require("destroy").unwrap(), vocab.require("move").unwrap()).is_infinite());
}
