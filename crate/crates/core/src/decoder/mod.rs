//! Mention-guided weighted Viterbi decoding.
//!
//! Each step's logit row is multiplied by `tau_exp` when the entity is
//! mentioned in that step and by `tau_imp` otherwise, then the weighted
//! matrix is decoded against a [`TransitionModel`].
//!
//! Emission file: one JSON object per (procedure, entity):
//!
//! ```json
//! {"procedure_id":"p1","entity_id":"water",
//!  "state_logits":[[0.1,2.3,-1.0,0.0,0.0,0.0], ...],
//!  "location_preds":["unknown","river","dam", ...]}
//! ```
//!
//! `state_logits` has one row per step in vocabulary label order;
//! `location_preds` one raw answer (`none`, `unknown` or a span) per slot
//! 0..T. Logits may be any finite reals; tuned taus only make sense for the
//! scale of the model that produced them.

mod mentions;
mod viterbi;

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use mentions::{detect_mentions, is_mentioned, tokenize};
pub use viterbi::{argmax_states, sequence_score, viterbi, Decoded};

use crate::corpus::{Corpus, Procedure, StateVocabulary};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::scalar::Score;
use crate::transitions::TransitionModel;

/// Score substituted for -inf when decoding with `--relax`.
pub const RELAX_PENALTY: f64 = -1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    tau_exp: f64,
    tau_imp: f64,
}

impl DecodeConfig {
    /// Grid-searched weights for explicit and implicit steps.
    pub const DEFAULT_TAU_EXP: f64 = 0.6;
    pub const DEFAULT_TAU_IMP: f64 = 0.7;

    pub fn new(tau_exp: f64, tau_imp: f64) -> Result<Self> {
        if !(tau_exp > 0.0 && tau_exp.is_finite()) || !(tau_imp > 0.0 && tau_imp.is_finite()) {
            return Err(Error::Config(format!(
                "taus must be positive and finite, got tau_exp={tau_exp}, tau_imp={tau_imp}"
            )));
        }
        Ok(Self { tau_exp, tau_imp })
    }

    pub fn unweighted() -> Self {
        Self {
            tau_exp: 1.0,
            tau_imp: 1.0,
        }
    }

    pub fn tau_exp(&self) -> f64 {
        self.tau_exp
    }

    pub fn tau_imp(&self) -> f64 {
        self.tau_imp
    }
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            tau_exp: Self::DEFAULT_TAU_EXP,
            tau_imp: Self::DEFAULT_TAU_IMP,
        }
    }
}

/// Scales row `i` by `tau_exp` if `mentioned[i]`, else by `tau_imp`.
/// Negative logits are scaled as given.
pub fn weight_emissions<S: Score>(
    logits: ArrayView2<'_, S>,
    mentioned: &[bool],
    config: &DecodeConfig,
) -> Result<Array2<S>> {
    if logits.nrows() != mentioned.len() {
        return Err(Error::Dimension(format!(
            "{} logit rows but {} mention flags",
            logits.nrows(),
            mentioned.len()
        )));
    }
    let exp = S::from_f64_lossy(config.tau_exp);
    let imp = S::from_f64_lossy(config.tau_imp);
    let mut out = logits.to_owned();
    for (mut row, &m) in out.rows_mut().into_iter().zip(mentioned) {
        let tau = if m { exp } else { imp };
        row.mapv_inplace(|v| v * tau);
    }
    Ok(out)
}

/// Model outputs for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityEmissions<S> {
    /// `T x |labels|`.
    pub state_logits: Array2<S>,
    /// `T + 1` raw location answers.
    pub location_preds: Vec<String>,
}

impl<S: Score> EntityEmissions<S> {
    pub fn num_steps(&self) -> usize {
        self.state_logits.nrows()
    }

    fn check(&self, steps: usize, labels: usize) -> Result<()> {
        if self.state_logits.dim() != (steps, labels) {
            return Err(Error::Dimension(format!(
                "state logits are {:?}, expected ({steps}, {labels})",
                self.state_logits.dim()
            )));
        }
        if self.location_preds.len() != steps + 1 {
            return Err(Error::Dimension(format!(
                "{} location predictions, expected {}",
                self.location_preds.len(),
                steps + 1
            )));
        }
        if self.state_logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("state logits must be finite".into()));
        }
        Ok(())
    }
}

/// Emissions of one procedure keyed by entity id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSet<S> {
    pub procedure_id: String,
    pub entities: BTreeMap<String, EntityEmissions<S>>,
}

/// Emission sets keyed by procedure id.
pub type Emissions<S> = BTreeMap<String, EmissionSet<S>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionRecord {
    pub procedure_id: String,
    pub entity_id: String,
    pub state_logits: Vec<Vec<f64>>,
    pub location_preds: Vec<String>,
}

/// Validates emission records against a corpus and vocabulary.
pub fn emissions_from_records(
    records: impl IntoIterator<Item = EmissionRecord>,
    corpus: &Corpus,
    vocab: &StateVocabulary,
) -> Result<Emissions<f64>> {
    let mut out: Emissions<f64> = BTreeMap::new();
    for r in records {
        let procedure = corpus.procedure(&r.procedure_id).ok_or_else(|| {
            Error::Validation(format!("emissions for unknown procedure {:?}", r.procedure_id))
        })?;
        if procedure.entity(&r.entity_id).is_none() {
            return Err(Error::Validation(format!(
                "emissions for unknown entity {:?} in procedure {}",
                r.entity_id, procedure.id
            )));
        }
        let rows = r.state_logits.len();
        let cols = r.state_logits.first().map_or(0, Vec::len);
        if r.state_logits.iter().any(|row| row.len() != cols) {
            return Err(Error::Dimension("ragged state logit rows".into()).for_entity(&procedure.id, &r.entity_id));
        }
        let flat: Vec<f64> = r.state_logits.into_iter().flatten().collect();
        let state_logits = Array2::from_shape_vec((rows, cols), flat).expect("shape checked");
        let e = EntityEmissions {
            state_logits,
            location_preds: r.location_preds,
        };
        e.check(procedure.num_steps(), vocab.len())
            .map_err(|err| err.for_entity(&procedure.id, &r.entity_id))?;
        let set = out.entry(procedure.id.clone()).or_insert_with(|| EmissionSet {
            procedure_id: procedure.id.clone(),
            entities: BTreeMap::new(),
        });
        if set.entities.insert(r.entity_id.clone(), e).is_some() {
            return Err(Error::Validation(format!(
                "duplicate emissions for procedure {}, entity {}",
                procedure.id, r.entity_id
            )));
        }
    }
    Ok(out)
}

pub fn emissions_to_records<S: Score>(emissions: &Emissions<S>) -> Vec<EmissionRecord> {
    let mut out = Vec::new();
    for set in emissions.values() {
        for (entity_id, e) in &set.entities {
            out.push(EmissionRecord {
                procedure_id: set.procedure_id.clone(),
                entity_id: entity_id.clone(),
                state_logits: e
                    .state_logits
                    .rows()
                    .into_iter()
                    .map(|row| row.iter().map(|v| v.to_f64_lossy()).collect())
                    .collect(),
                location_preds: e.location_preds.clone(),
            });
        }
    }
    out
}

pub fn load_emissions(path: &Path, corpus: &Corpus, vocab: &StateVocabulary) -> Result<Emissions<f64>> {
    let records: Vec<(usize, EmissionRecord)> = jsonl::read(path)?;
    emissions_from_records(records.into_iter().map(|(_, r)| r), corpus, vocab)
}

pub fn save_emissions<S: Score>(path: &Path, emissions: &Emissions<S>) -> Result<()> {
    jsonl::write(path, &emissions_to_records(emissions))
}

/// Mention detection, weighting and Viterbi for one entity.
pub fn decode_entity<S: Score>(
    procedure: &Procedure,
    entity_id: &str,
    emissions: &EntityEmissions<S>,
    model: &TransitionModel<S>,
    config: &DecodeConfig,
) -> Result<Decoded<S>> {
    let entity = procedure.entity(entity_id).ok_or_else(|| {
        Error::Validation(format!("entity {entity_id:?} is not part of procedure {}", procedure.id))
    })?;
    let flags = detect_mentions(procedure, entity);
    let weighted = weight_emissions(emissions.state_logits.view(), &flags, config)?;
    viterbi(weighted.view(), model)
}
