use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consistency::{resolve, Repair, ResolvedTrack};
use crate::corpus::{save_grids, AnnotationGrid, Corpus, Procedure, StateVocabulary};
use crate::jsonl;
use crate::decoder::{argmax_states, detect_mentions, viterbi, weight_emissions, DecodeConfig, Emissions};
use crate::error::{Error, Result};
use crate::evaluator::{self, EntityKey, EvalReport, GridMap, SplitReport};
use crate::scalar::Score;
use crate::transitions::TransitionModel;

/// Decoded and raw-argmax tracks of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityResult {
    pub procedure_id: String,
    pub entity_id: String,
    pub mentions: Vec<bool>,
    pub decoded: ResolvedTrack,
    pub raw_argmax: ResolvedTrack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub results: Vec<EntityResult>,
    /// `(procedure, entity)` pairs without emissions, scored as empty tracks.
    pub missing: Vec<EntityKey>,
    pub predictions: GridMap,
    pub raw_predictions: GridMap,
    pub report: Option<EvalReport>,
    pub raw_report: Option<EvalReport>,
}

impl PipelineOutput {
    pub fn warnings(&self) -> Vec<String> {
        self.missing
            .iter()
            .map(|(p, e)| format!("no emissions for procedure {p}, entity {e}; scored as an empty track"))
            .collect()
    }

    pub fn repairs(&self) -> impl Iterator<Item = (&EntityResult, &Repair)> {
        self.results.iter().flat_map(|r| r.decoded.repairs.iter().map(move |x| (r, x)))
    }

    /// Writes `predictions.jsonl`, `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path, vocab: &StateVocabulary) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_grids(&dir.join("predictions.jsonl"), &self.predictions, vocab)?;
        if let Some(report) = &self.report {
            let json = dir.join("report.json");
            fs::write(&json, report.to_json()).map_err(|e| Error::io(&json, e))?;
            let txt = dir.join("report.txt");
            fs::write(&txt, report.to_table()).map_err(|e| Error::io(&txt, e))?;
        }
        Ok(())
    }
}

fn tasks(corpus: &Corpus) -> Vec<(&Procedure, &str)> {
    corpus
        .procedures
        .iter()
        .flat_map(|p| p.entities.iter().map(move |e| (p, e.id.as_str())))
        .collect()
}

/// Decodes and resolves every entity that has emissions, in parallel, with
/// results in corpus order.
pub fn decode_corpus<S: Score>(
    corpus: &Corpus,
    emissions: &Emissions<S>,
    model: &TransitionModel<S>,
    config: &DecodeConfig,
) -> Result<(Vec<EntityResult>, Vec<EntityKey>)> {
    let vocab = model.vocab();
    let outcomes: Vec<Result<Option<EntityResult>>> = tasks(corpus)
        .into_par_iter()
        .map(|(procedure, entity_id)| {
            let Some(em) = emissions.get(&procedure.id).and_then(|s| s.entities.get(entity_id)) else {
                return Ok(None);
            };
            let run = || -> Result<EntityResult> {
                let entity = procedure.entity(entity_id).expect("task entities exist");
                let mentions = detect_mentions(procedure, entity);
                let weighted = weight_emissions(em.state_logits.view(), &mentions, config)?;
                let decoded = viterbi(weighted.view(), model)?;
                let raw = argmax_states(em.state_logits.view());
                Ok(EntityResult {
                    procedure_id: procedure.id.clone(),
                    entity_id: entity_id.to_string(),
                    mentions,
                    decoded: resolve(&decoded.states, &em.location_preds, vocab)?,
                    raw_argmax: resolve(&raw, &em.location_preds, vocab)?,
                })
            };
            run().map(Some).map_err(|e| e.for_entity(&procedure.id, entity_id))
        })
        .collect();

    let mut results = Vec::new();
    let mut missing = Vec::new();
    for ((procedure, entity_id), outcome) in tasks(corpus).into_iter().zip(outcomes) {
        match outcome? {
            Some(r) => results.push(r),
            None => missing.push((procedure.id.clone(), entity_id.to_string())),
        }
    }
    Ok((results, missing))
}

/// A decoded state sequence before conflict resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodedRecord {
    pub procedure_id: String,
    pub entity_id: String,
    pub states: Vec<String>,
    pub score: f64,
}

/// Weighted Viterbi for every entity with emissions, in corpus order. Also
/// returns the entities that had none.
pub fn decode_records<S: Score>(
    corpus: &Corpus,
    emissions: &Emissions<S>,
    model: &TransitionModel<S>,
    config: &DecodeConfig,
) -> Result<(Vec<DecodedRecord>, Vec<EntityKey>)> {
    let vocab = model.vocab();
    let outcomes: Vec<Result<Option<DecodedRecord>>> = tasks(corpus)
        .into_par_iter()
        .map(|(procedure, entity_id)| {
            let Some(em) = emissions.get(&procedure.id).and_then(|s| s.entities.get(entity_id)) else {
                return Ok(None);
            };
            let entity = procedure.entity(entity_id).expect("task entities exist");
            let run = || -> Result<DecodedRecord> {
                let weighted = weight_emissions(em.state_logits.view(), &detect_mentions(procedure, entity), config)?;
                let d = viterbi(weighted.view(), model)?;
                Ok(DecodedRecord {
                    procedure_id: procedure.id.clone(),
                    entity_id: entity_id.to_string(),
                    states: d.states.iter().map(|&s| vocab.label(s).to_string()).collect(),
                    score: d.score.to_f64_lossy(),
                })
            };
            run().map(Some).map_err(|e| e.for_entity(&procedure.id, entity_id))
        })
        .collect();
    let mut records = Vec::new();
    let mut missing = Vec::new();
    for ((procedure, entity_id), outcome) in tasks(corpus).into_iter().zip(outcomes) {
        match outcome? {
            Some(r) => records.push(r),
            None => missing.push((procedure.id.clone(), entity_id.to_string())),
        }
    }
    Ok((records, missing))
}

pub fn save_decoded(path: &Path, records: &[DecodedRecord]) -> Result<()> {
    jsonl::write(path, records)
}

pub fn load_decoded(path: &Path) -> Result<Vec<DecodedRecord>> {
    Ok(jsonl::read(path)?.into_iter().map(|(_, r)| r).collect())
}

/// Conflict resolution of decoded records against the location answers in
/// `emissions`. Results follow the record order.
pub fn resolve_records<S: Score>(
    records: &[DecodedRecord],
    corpus: &Corpus,
    emissions: &Emissions<S>,
    vocab: &StateVocabulary,
) -> Result<Vec<(EntityKey, ResolvedTrack)>> {
    let mut seen = std::collections::BTreeSet::new();
    records
        .iter()
        .map(|r| {
            let mut run = || -> Result<ResolvedTrack> {
                let procedure = corpus
                    .procedure(&r.procedure_id)
                    .ok_or_else(|| Error::Validation("procedure is not in the corpus".into()))?;
                procedure
                    .entity(&r.entity_id)
                    .ok_or_else(|| Error::Validation("entity is not in the procedure".into()))?;
                if !seen.insert((r.procedure_id.as_str(), r.entity_id.as_str())) {
                    return Err(Error::Validation("decoded twice".into()));
                }
                if r.states.len() != procedure.num_steps() {
                    return Err(Error::Dimension(format!(
                        "{} decoded states for {} steps",
                        r.states.len(),
                        procedure.num_steps()
                    )));
                }
                let states: Vec<usize> = r.states.iter().map(|s| vocab.require(s)).collect::<Result<_>>()?;
                let em = emissions
                    .get(&r.procedure_id)
                    .and_then(|s| s.entities.get(&r.entity_id))
                    .ok_or_else(|| Error::Validation("no location answers in the emissions".into()))?;
                resolve(&states, &em.location_preds, vocab)
            };
            let track = run().map_err(|e| e.for_entity(&r.procedure_id, &r.entity_id))?;
            Ok(((r.procedure_id.clone(), r.entity_id.clone()), track))
        })
        .collect()
}

/// Collects resolved tracks into prediction grids.
pub fn grids_from_tracks<'a>(tracks: impl IntoIterator<Item = &'a (EntityKey, ResolvedTrack)>) -> GridMap {
    to_grids(tracks.into_iter().map(|((p, e), t)| (p.as_str(), e.as_str(), t)))
}

fn to_grids<'a>(results: impl Iterator<Item = (&'a str, &'a str, &'a ResolvedTrack)>) -> GridMap {
    let mut out: GridMap = BTreeMap::new();
    for (pid, eid, track) in results {
        out.entry(pid.to_string())
            .or_insert_with(|| AnnotationGrid::new(pid))
            .entries
            .insert(eid.to_string(), track.track());
    }
    out
}

/// Evaluation objective used by the tuner: document-level macro F1 for event
/// vocabularies, location-change F1 for presence vocabularies.
pub fn objective(report: &EvalReport) -> f64 {
    match (&report.doc_level, &report.recipes_location) {
        (Some(d), _) => d.macro_f1(),
        (None, Some(q)) => q.f1(),
        (None, None) => 0.0,
    }
}

/// Decode, resolve and (when the corpus has gold) evaluate.
pub fn run_pipeline<S: Score>(
    corpus: &Corpus,
    emissions: &Emissions<S>,
    model: &TransitionModel<S>,
    config: &DecodeConfig,
    per_procedure: bool,
) -> Result<PipelineOutput> {
    let vocab = model.vocab();
    let (results, missing) = decode_corpus(corpus, emissions, model, config)?;
    let predictions = to_grids(results.iter().map(|r| (r.procedure_id.as_str(), r.entity_id.as_str(), &r.decoded)));
    let raw_predictions =
        to_grids(results.iter().map(|r| (r.procedure_id.as_str(), r.entity_id.as_str(), &r.raw_argmax)));

    let (report, raw_report) = if corpus.gold.is_empty() {
        (None, None)
    } else {
        let mut report = evaluator::evaluate(&corpus.gold, &predictions, vocab)?;
        let raw_report = evaluator::evaluate(&corpus.gold, &raw_predictions, vocab)?;
        let key = |r: &EntityResult| (r.procedure_id.clone(), r.entity_id.clone());
        let mut mentions: BTreeMap<EntityKey, Vec<bool>> = results.iter().map(|r| (key(r), r.mentions.clone())).collect();
        for (pid, eid) in &missing {
            let p = corpus.procedure(pid).expect("missing keys come from the corpus");
            let e = p.entity(eid).expect("missing keys come from the corpus");
            mentions.insert((pid.clone(), eid.clone()), detect_mentions(p, e));
        }
        let decoded_states = results.iter().map(|r| (key(r), r.decoded.states.clone())).collect();
        let raw_states = results.iter().map(|r| (key(r), r.raw_argmax.states.clone())).collect();
        report.split = Some(SplitReport {
            raw_argmax: evaluator::eval_split(&corpus.gold, &raw_states, &mentions)?,
            decoded: evaluator::eval_split(&corpus.gold, &decoded_states, &mentions)?,
        });
        if per_procedure {
            report.per_procedure = Some(evaluator::evaluate_per_procedure(&corpus.gold, &predictions, vocab)?);
        }
        (Some(report), Some(raw_report))
    };

    Ok(PipelineOutput {
        results,
        missing,
        predictions,
        raw_predictions,
        report,
        raw_report,
    })
}
