//! Procedures, entities and annotation grids, plus the corpus and grid file
//! formats.
//!
//! A corpus file holds one JSON object per line:
//!
//! ```json
//! {"id":"p1","steps":["Water flows ...","..."],
//!  "entities":[{"id":"water","raw_name":"water"}],
//!  "gold":{"water":{"states":["move","..."],"locations":["?","dam","..."]}}}
//! ```
//!
//! `gold` is optional; when present it must cover every entity, with one
//! state per step and one location per slot (`T + 1`, slot 0 before step 1).
//! Locations use `-` for nonexistent and `?` for unknown. Gold grids must
//! satisfy the consistency rules of [`check_track`].
//!
//! A grid file (predictions) holds one `{"procedure_id", "tracks"}` object
//! per line where `tracks` maps entity ids to the same `{states, locations}`
//! shape. Prediction grids are validated for shape only.

mod grid;
mod location;
mod vocab;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use grid::{check_track, AnnotationGrid, ConsistencyRule, Entity, Procedure, Track, Violation};
pub use location::{normalize, LocationKey, LocationValue, NONEXISTENT, UNKNOWN};
pub use vocab::{EventRoles, StateVocabulary};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityRecord {
    pub id: String,
    pub raw_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackRecord {
    pub states: Vec<String>,
    pub locations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcedureRecord {
    pub id: String,
    pub steps: Vec<String>,
    pub entities: Vec<EntityRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<BTreeMap<String, TrackRecord>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRecord {
    pub procedure_id: String,
    pub tracks: BTreeMap<String, TrackRecord>,
}

impl TrackRecord {
    pub fn from_track(track: &Track, vocab: &StateVocabulary) -> Self {
        Self {
            states: track.states.iter().map(|&s| vocab.label(s).to_string()).collect(),
            locations: track.locations.iter().map(|l| l.as_grid_str().to_string()).collect(),
        }
    }

    pub fn to_track(&self, vocab: &StateVocabulary) -> Result<Track> {
        Ok(Track {
            states: self.states.iter().map(|s| vocab.require(s)).collect::<Result<_>>()?,
            locations: self.locations.iter().map(|l| LocationValue::from_grid(l)).collect(),
        })
    }
}

impl GridRecord {
    pub fn from_grid(grid: &AnnotationGrid, vocab: &StateVocabulary) -> Self {
        Self {
            procedure_id: grid.procedure_id.clone(),
            tracks: grid
                .entries
                .iter()
                .map(|(id, t)| (id.clone(), TrackRecord::from_track(t, vocab)))
                .collect(),
        }
    }
}

/// A validated corpus. Procedures keep file order; gold grids are keyed by
/// procedure id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub procedures: Vec<Procedure>,
    pub gold: BTreeMap<String, AnnotationGrid>,
}

impl Corpus {
    pub fn load(path: &Path, vocab: &StateVocabulary) -> Result<Self> {
        let records = jsonl::read(path)?;
        Self::from_records(records, &path.display().to_string(), vocab)
    }

    pub fn parse(text: &str, vocab: &StateVocabulary) -> Result<Self> {
        let records = jsonl::parse(text.as_bytes(), "<input>")?;
        Self::from_records(records, "<input>", vocab)
    }

    fn from_records(
        records: Vec<(usize, ProcedureRecord)>,
        source: &str,
        vocab: &StateVocabulary,
    ) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (line, record) in records {
            let at = |e: Error| match e {
                Error::Validation(msg) => Error::Validation(format!("{source}:{line}: {msg}")),
                other => other,
            };
            let (procedure, gold) = Self::validate_record(record, vocab).map_err(at)?;
            if corpus.procedure(&procedure.id).is_some() {
                return Err(at(Error::Validation(format!("duplicate procedure id {}", procedure.id))));
            }
            if let Some(g) = gold {
                corpus.gold.insert(procedure.id.clone(), g);
            }
            corpus.procedures.push(procedure);
        }
        Ok(corpus)
    }

    fn validate_record(
        record: ProcedureRecord,
        vocab: &StateVocabulary,
    ) -> Result<(Procedure, Option<AnnotationGrid>)> {
        let entities = record
            .entities
            .iter()
            .map(|e| Entity::from_raw(&e.id, &e.raw_name))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| in_procedure(e, &record.id))?;
        let procedure = Procedure::new(&record.id, record.steps, entities)?;
        let Some(gold) = record.gold else {
            return Ok((procedure, None));
        };
        let mut grid = AnnotationGrid::new(&procedure.id);
        for (entity_id, tr) in gold {
            if procedure.entity(&entity_id).is_none() {
                return Err(Error::Validation(format!(
                    "procedure {}: gold names unknown entity {entity_id:?}",
                    procedure.id
                )));
            }
            let track = tr.to_track(vocab).map_err(|e| e.for_entity(&procedure.id, &entity_id))?;
            grid::check_shape(&track, procedure.num_steps(), vocab)
                .map_err(|e| in_entity(e, &procedure.id, &entity_id))?;
            if let Some(v) = check_track(&track, vocab).first() {
                return Err(Error::Validation(format!(
                    "procedure {}, entity {entity_id}: inconsistent gold at {v}",
                    procedure.id
                )));
            }
            grid.entries.insert(entity_id, track);
        }
        if let Some(missing) = procedure.entities.iter().find(|e| !grid.entries.contains_key(&e.id)) {
            return Err(Error::Validation(format!(
                "procedure {}: gold is missing entity {:?}",
                procedure.id, missing.id
            )));
        }
        Ok((procedure, Some(grid)))
    }

    pub fn procedure(&self, id: &str) -> Option<&Procedure> {
        self.procedures.iter().find(|p| p.id == id)
    }

    pub fn to_records(&self, vocab: &StateVocabulary) -> Vec<ProcedureRecord> {
        self.procedures
            .iter()
            .map(|p| ProcedureRecord {
                id: p.id.clone(),
                steps: p.steps.clone(),
                entities: p
                    .entities
                    .iter()
                    .map(|e| EntityRecord {
                        id: e.id.clone(),
                        raw_name: e.raw_name(),
                    })
                    .collect(),
                gold: self.gold.get(&p.id).map(|g| {
                    g.entries
                        .iter()
                        .map(|(id, t)| (id.clone(), TrackRecord::from_track(t, vocab)))
                        .collect()
                }),
            })
            .collect()
    }

    pub fn save(&self, path: &Path, vocab: &StateVocabulary) -> Result<()> {
        jsonl::write(path, &self.to_records(vocab))
    }

    pub fn stats(&self) -> SplitStats {
        split_stats(&self.procedures)
    }
}

fn in_procedure(e: Error, procedure: &str) -> Error {
    match e {
        Error::Validation(msg) => Error::Validation(format!("procedure {procedure}: {msg}")),
        other => other,
    }
}

fn in_entity(e: Error, procedure: &str, entity: &str) -> Error {
    match e {
        Error::Validation(msg) => Error::Validation(format!("procedure {procedure}, entity {entity}: {msg}")),
        other => other,
    }
}

/// Reads a grid file, checking every track against its procedure's length,
/// entity set and the vocabulary. Consistency is not enforced.
pub fn load_grids(
    path: &Path,
    corpus: &Corpus,
    vocab: &StateVocabulary,
) -> Result<BTreeMap<String, AnnotationGrid>> {
    let records: Vec<(usize, GridRecord)> = jsonl::read(path)?;
    grids_from_records(records.into_iter().map(|(_, r)| r), corpus, vocab)
}

pub fn grids_from_records(
    records: impl IntoIterator<Item = GridRecord>,
    corpus: &Corpus,
    vocab: &StateVocabulary,
) -> Result<BTreeMap<String, AnnotationGrid>> {
    let mut out = BTreeMap::new();
    for record in records {
        let procedure = corpus.procedure(&record.procedure_id).ok_or_else(|| {
            Error::Validation(format!("grid for unknown procedure {:?}", record.procedure_id))
        })?;
        let mut grid = AnnotationGrid::new(&procedure.id);
        for (entity_id, tr) in record.tracks {
            if procedure.entity(&entity_id).is_none() {
                return Err(Error::Validation(format!(
                    "procedure {}: grid names unknown entity {entity_id:?}",
                    procedure.id
                )));
            }
            let track = tr.to_track(vocab).map_err(|e| e.for_entity(&procedure.id, &entity_id))?;
            grid::check_shape(&track, procedure.num_steps(), vocab)
                .map_err(|e| in_entity(e, &procedure.id, &entity_id))?;
            grid.entries.insert(entity_id, track);
        }
        if out.insert(procedure.id.clone(), grid).is_some() {
            return Err(Error::Validation(format!("duplicate grid for procedure {}", procedure.id)));
        }
    }
    Ok(out)
}

pub fn save_grids(path: &Path, grids: &BTreeMap<String, AnnotationGrid>, vocab: &StateVocabulary) -> Result<()> {
    let records: Vec<GridRecord> = grids.values().map(|g| GridRecord::from_grid(g, vocab)).collect();
    jsonl::write(path, &records)
}

/// Consistency violations in a set of grids, as `(procedure, entity, violation)`.
pub fn grid_violations(
    grids: &BTreeMap<String, AnnotationGrid>,
    vocab: &StateVocabulary,
) -> Vec<(String, String, Violation)> {
    let mut out = Vec::new();
    for (pid, grid) in grids {
        for (eid, track) in &grid.entries {
            for v in check_track(track, vocab) {
                out.push((pid.clone(), eid.clone(), v));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitStats {
    pub procedures: usize,
    pub avg_steps: f64,
    pub avg_entities: f64,
}

impl fmt::Display for SplitStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{:.1}\t{:.1}", self.procedures, self.avg_steps, self.avg_entities)
    }
}

pub fn split_stats(procedures: &[Procedure]) -> SplitStats {
    let n = procedures.len();
    if n == 0 {
        return SplitStats {
            procedures: 0,
            avg_steps: 0.0,
            avg_entities: 0.0,
        };
    }
    let steps: usize = procedures.iter().map(|p| p.num_steps()).sum();
    let entities: usize = procedures.iter().map(|p| p.entities.len()).sum();
    SplitStats {
        procedures: n,
        avg_steps: steps as f64 / n as f64,
        avg_entities: entities as f64 / n as f64,
    }
}
