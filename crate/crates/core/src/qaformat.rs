//! Question-answering instances for state prediction (multiple choice) and
//! location prediction (extractive).
//!
//! Byte layout, with `{alias}` the entity's first alias:
//!
//! ```text
//! What is the state of {alias} in step {t}?\n(a) {l1} (b) {l2} ...\nstep 1: {s1} step 2: {s2} ...
//! Where is {alias} located in step {t}?\nstep 1: {s1} ... step T: {sT} Other locations: none, unknown.
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Procedure, StateVocabulary, Track};
use crate::error::{Error, Result};
use crate::jsonl;

pub const OTHER_LOCATIONS: &str = "Other locations: none, unknown.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QaKind {
    State,
    Location,
}

impl QaKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "state" => Ok(QaKind::State),
            "location" => Ok(QaKind::Location),
            other => Err(Error::Config(format!("unknown instance kind {other:?}"))),
        }
    }
}

/// One instance record. `target` is empty for inference-only instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaInstance {
    pub procedure_id: String,
    pub entity_id: String,
    pub step: usize,
    pub kind: QaKind,
    pub input: String,
    pub target: String,
}

/// `"step 1: {s1} step 2: {s2} ..."` over the full procedure.
pub fn indexed_procedure(procedure: &Procedure) -> String {
    procedure
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("step {}: {}", i + 1, s))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `"(a) create (b) exist ..."` in the vocabulary's choice order.
pub fn choices_line(vocab: &StateVocabulary) -> Result<String> {
    if vocab.len() > 26 {
        return Err(Error::Config(format!(
            "vocabulary {} has {} labels; at most 26 lettered choices are supported",
            vocab.name(),
            vocab.len()
        )));
    }
    Ok(vocab
        .choice_order()
        .iter()
        .enumerate()
        .map(|(i, &label)| format!("({}) {}", (b'a' + i as u8) as char, vocab.label(label)))
        .collect::<Vec<_>>()
        .join(" "))
}

fn check_entity<'a>(procedure: &'a Procedure, entity_id: &str) -> Result<&'a crate::corpus::Entity> {
    procedure.entity(entity_id).ok_or_else(|| {
        Error::Validation(format!("entity {entity_id:?} is not part of procedure {}", procedure.id))
    })
}

pub fn format_state_instance(
    procedure: &Procedure,
    entity_id: &str,
    step: usize,
    vocab: &StateVocabulary,
    gold: Option<&Track>,
) -> Result<QaInstance> {
    let entity = check_entity(procedure, entity_id)?;
    let steps = procedure.num_steps();
    if step == 0 || step > steps {
        return Err(Error::Validation(format!(
            "state instances need a step in 1..={steps}, got {step}"
        )));
    }
    let input = format!(
        "What is the state of {} in step {step}?\n{}\n{}",
        entity.first_alias(),
        choices_line(vocab)?,
        indexed_procedure(procedure)
    );
    let target = gold
        .map(|t| vocab.label(t.states[step - 1]).to_string())
        .unwrap_or_default();
    Ok(QaInstance {
        procedure_id: procedure.id.clone(),
        entity_id: entity.id.clone(),
        step,
        kind: QaKind::State,
        input,
        target,
    })
}

pub fn format_location_instance(
    procedure: &Procedure,
    entity_id: &str,
    step: usize,
    gold: Option<&Track>,
) -> Result<QaInstance> {
    let entity = check_entity(procedure, entity_id)?;
    let steps = procedure.num_steps();
    if step > steps {
        return Err(Error::Validation(format!(
            "location instances need a slot in 0..={steps}, got {step}"
        )));
    }
    let input = format!(
        "Where is {} located in step {step}?\n{} {OTHER_LOCATIONS}",
        entity.first_alias(),
        indexed_procedure(procedure)
    );
    let target = gold
        .map(|t| t.locations[step].as_answer_str().to_string())
        .unwrap_or_default();
    Ok(QaInstance {
        procedure_id: procedure.id.clone(),
        entity_id: entity.id.clone(),
        step,
        kind: QaKind::Location,
        input,
        target,
    })
}

/// All instances of the requested kinds, ordered by
/// (procedure id, entity id, step, kind).
pub fn build_instances(corpus: &Corpus, vocab: &StateVocabulary, kinds: &[QaKind]) -> Result<Vec<QaInstance>> {
    let mut out = Vec::new();
    for procedure in &corpus.procedures {
        let grid = corpus.gold.get(&procedure.id);
        for entity in &procedure.entities {
            let gold = grid.and_then(|g| g.entries.get(&entity.id));
            if kinds.contains(&QaKind::State) {
                for t in 1..=procedure.num_steps() {
                    out.push(format_state_instance(procedure, &entity.id, t, vocab, gold)?);
                }
            }
            if kinds.contains(&QaKind::Location) {
                for t in 0..=procedure.num_steps() {
                    out.push(format_location_instance(procedure, &entity.id, t, gold)?);
                }
            }
        }
    }
    out.sort_by(|a, b| {
        (&a.procedure_id, &a.entity_id, a.step, a.kind).cmp(&(&b.procedure_id, &b.entity_id, b.step, b.kind))
    });
    Ok(out)
}

pub fn export_instances(corpus: &Corpus, vocab: &StateVocabulary, kinds: &[QaKind], out: &Path) -> Result<usize> {
    let instances = build_instances(corpus, vocab, kinds)?;
    jsonl::write(out, &instances)?;
    Ok(instances.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Entity;

    fn procedure() -> Procedure {
        Procedure::new(
            "p",
            vec!["Water flows.".into(), "It stops.".into()],
            vec![Entity::from_raw("water; liquid", "water; liquid").unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn state_layout() {
        let q = format_state_instance(&procedure(), "water; liquid", 1, &StateVocabulary::propara(), None).unwrap();
        assert_eq!(
            q.input,
            "What is the state of water in step 1?\n\
             (a) create (b) exist (c) destroy (d) outside_before (e) outside_after (f) move\n\
             step 1: Water flows. step 2: It stops."
        );
        assert_eq!(q.target, "");
    }

    #[test]
    fn recipes_choices() {
        assert_eq!(choices_line(&StateVocabulary::recipes()).unwrap(), "(a) exist (b) absence");
    }

    #[test]
    fn location_layout() {
        let q = format_location_instance(&procedure(), "water; liquid", 0, None).unwrap();
        assert_eq!(
            q.input,
            "Where is water located in step 0?\nstep 1: Water flows. step 2: It stops. Other locations: none, unknown."
        );
    }

    #[test]
    fn step_ranges() {
        let p = procedure();
        let v = StateVocabulary::propara();
        assert!(format_state_instance(&p, "water; liquid", 0, &v, None).is_err());
        assert!(format_state_instance(&p, "water; liquid", 3, &v, None).is_err());
        assert!(format_location_instance(&p, "water; liquid", 3, None).is_err());
        assert!(format_location_instance(&p, "ice", 1, None).is_err());
    }

    #[test]
    fn location_targets() {
        use crate::corpus::LocationValue;
        let p = procedure();
        let track = Track {
            states: vec![0, 1],
            locations: vec![LocationValue::Nonexistent, LocationValue::Unknown, LocationValue::span("pot")],
        };
        let targets: Vec<_> = (0..3)
            .map(|t| format_location_instance(&p, "water; liquid", t, Some(&track)).unwrap().target)
            .collect();
        assert_eq!(targets, ["none", "unknown", "pot"]);
    }
}
