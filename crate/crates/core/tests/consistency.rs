use proptest::prelude::*;

use proctrack_core::consistency::{is_satisfiable, resolve, RepairRule};
use proctrack_core::corpus::check_track;
use proctrack_core::harness::synth_corpus;
use proctrack_core::{LocationValue, StateVocabulary};

const ANSWERS: &[&str] = &["none", "unknown", "soil", "Soil.", "river", "the pond", "NONE", ""];

fn labels(vocab: &StateVocabulary) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..vocab.len(), 1..10)
}

fn answers(len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(ANSWERS).prop_map(str::to_string), len)
}

fn case(vocab: StateVocabulary) -> impl Strategy<Value = (Vec<usize>, Vec<String>)> {
    labels(&vocab).prop_flat_map(|s| {
        let n = s.len();
        (Just(s), answers(n + 1))
    })
}

/// Satisfiability by search: some assignment of `-` / `a` / `b` per slot
/// passes every rule. Two distinct spans suffice since rules only compare
/// neighbouring slots.
fn satisfiable_by_search(states: &[usize], vocab: &StateVocabulary) -> bool {
    let values = [LocationValue::Nonexistent, LocationValue::span("a"), LocationValue::span("b")];
    let slots = states.len() + 1;
    (0..3usize.pow(slots as u32)).any(|code| {
        let locations = (0..slots).map(|i| values[code / 3usize.pow(i as u32) % 3].clone()).collect();
        let track = proctrack_core::Track {
            states: states.to_vec(),
            locations,
        };
        check_track(&track, vocab).is_empty()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn satisfiable_inputs_resolve_cleanly((states, preds) in case(StateVocabulary::propara())) {
        let vocab = StateVocabulary::propara();
        let r = resolve(&states, &preds, &vocab).unwrap();
        prop_assert_eq!(&r.states, &states);
        prop_assert_eq!(r.locations.len(), states.len() + 1);
        if is_satisfiable(&states, &vocab) {
            prop_assert!(check_track(&r.track(), &vocab).is_empty(), "{:?}", r);
        }
    }

    #[test]
    fn satisfiability_matches_search(states in prop::collection::vec(0..6usize, 1..7)) {
        let vocab = StateVocabulary::propara();
        prop_assert_eq!(is_satisfiable(&states, &vocab), satisfiable_by_search(&states, &vocab));
    }

    #[test]
    fn presence_vocabulary_keeps_answers((states, preds) in case(StateVocabulary::recipes())) {
        let vocab = StateVocabulary::recipes();
        let r = resolve(&states, &preds, &vocab).unwrap();
        let absent = vocab.require("absence").unwrap();
        for t in 1..=states.len() {
            if states[t - 1] == absent {
                prop_assert!(r.locations[t].is_nonexistent());
            } else {
                prop_assert!(r.locations[t].same_as(&LocationValue::from_prediction(&preds[t])));
            }
        }
    }

    #[test]
    fn resolving_twice_changes_nothing((states, preds) in case(StateVocabulary::propara())) {
        let vocab = StateVocabulary::propara();
        prop_assume!(is_satisfiable(&states, &vocab));
        let once = resolve(&states, &preds, &vocab).unwrap();
        let again: Vec<String> = once.locations.iter().map(|l| l.as_answer_str().to_string()).collect();
        let twice = resolve(&states, &again, &vocab).unwrap();
        prop_assert_eq!(&twice.locations, &once.locations);
        prop_assert!(twice.repairs.is_empty());
    }
}

#[test]
fn consistent_gold_needs_no_repairs() {
    let vocab = StateVocabulary::propara();
    let corpus = synth_corpus(100, 8).unwrap();
    for grid in corpus.gold.values() {
        for track in grid.entries.values() {
            let preds: Vec<String> = track.locations.iter().map(|l| l.as_answer_str().to_string()).collect();
            let r = resolve(&track.states, &preds, &vocab).unwrap();
            assert!(r.repairs.is_empty(), "{:?}", r.repairs);
            assert_eq!(&r.locations, &track.locations);
        }
    }
}

#[test]
fn hand_repairs() {
    let vocab = StateVocabulary::propara();
    let s = |l: &str| vocab.require(l).unwrap();
    let preds = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();

    // create at 2 clears slot 1 and (through exist at 1) slot 0
    let r = resolve(&[s("exist"), s("create")], &preds(&["soil", "soil", "none"]), &vocab).unwrap();
    assert_eq!(r.locations, vec![LocationValue::Nonexistent, LocationValue::Nonexistent, LocationValue::Unknown]);
    let rules: Vec<RepairRule> = r.repairs.iter().map(|x| x.rule).collect();
    assert_eq!(rules, vec![RepairRule::Create, RepairRule::Create, RepairRule::Create]);

    // destroy forgets the location, move to the same place becomes unknown
    let r = resolve(&[s("move"), s("destroy")], &preds(&["river", "river", "lake"]), &vocab).unwrap();
    assert_eq!(
        r.locations,
        vec![LocationValue::span("river"), LocationValue::Unknown, LocationValue::Nonexistent]
    );
    assert_eq!(r.repairs.len(), 2);
    assert_eq!(r.repairs[0].rule, RepairRule::Move);
    assert_eq!(r.repairs[1].rule, RepairRule::Gone);

    // exist copies the previous slot
    let r = resolve(&[s("exist"), s("exist")], &preds(&["pond", "lake", "sea"]), &vocab).unwrap();
    assert_eq!(r.locations, vec![LocationValue::span("pond"); 3]);
    assert!(r.repairs.iter().all(|x| x.rule == RepairRule::Exist));
}
