use rayon::prelude::*;
use serde::Serialize;

use super::pipeline::{decode_corpus, objective};
use crate::consistency::resolve;
use crate::corpus::{AnnotationGrid, Corpus};
use crate::decoder::{detect_mentions, viterbi, weight_emissions, DecodeConfig, Emissions, EntityEmissions};
use crate::error::{Error, Result};
use crate::evaluator::{self, GridMap};
use crate::scalar::Score;
use crate::transitions::TransitionModel;

/// Candidate values for each tau.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub tau_exp: Vec<f64>,
    pub tau_imp: Vec<f64>,
}

impl GridSpec {
    /// `min, min + step, ..., max` with values rounded to 1e-9 so that
    /// decimal grids hit their nominal points exactly.
    pub fn range(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
        if !(min > 0.0 && step > 0.0 && max >= min && max.is_finite()) {
            return Err(Error::Config(format!("bad tau range {min}..{max} step {step}")));
        }
        let n = ((max - min) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| ((min + k as f64 * step) * 1e9).round() / 1e9).collect())
    }

    pub fn square(values: Vec<f64>) -> Self {
        Self {
            tau_exp: values.clone(),
            tau_imp: values,
        }
    }

    pub fn single(tau_exp: f64, tau_imp: f64) -> Self {
        Self {
            tau_exp: vec![tau_exp],
            tau_imp: vec![tau_imp],
        }
    }

    pub fn cells(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .tau_exp
            .iter()
            .flat_map(|&e| self.tau_imp.iter().map(move |&i| (e, i)))
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite taus"));
        out.dedup();
        out
    }
}

impl Default for GridSpec {
    /// Both taus over 0.1, 0.2, ..., 1.5.
    fn default() -> Self {
        Self::square((1..=15).map(|k| k as f64 / 10.0).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuneCell {
    pub tau_exp: f64,
    pub tau_imp: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub best: TuneCell,
    /// Every cell, ordered by (tau_exp, tau_imp).
    pub table: Vec<TuneCell>,
}

impl TuneResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tune result serializes");
        s.push('\n');
        s
    }

    pub fn cell(&self, tau_exp: f64, tau_imp: f64) -> Option<&TuneCell> {
        self.table.iter().find(|c| c.tau_exp == tau_exp && c.tau_imp == tau_imp)
    }
}

struct Task<'a, S> {
    procedure_id: &'a str,
    entity_id: &'a str,
    emissions: &'a EntityEmissions<S>,
    mentions: Vec<bool>,
}

/// Decode, resolve and evaluate one cell; the same steps and the same
/// report as [`super::run_pipeline`], minus the raw-argmax diagnostics.
fn score_cell<S: Score>(
    corpus: &Corpus,
    tasks: &[Task<'_, S>],
    model: &TransitionModel<S>,
    config: &DecodeConfig,
) -> Result<f64> {
    let vocab = model.vocab();
    let mut predictions = GridMap::new();
    for task in tasks {
        let run = || -> Result<_> {
            let weighted = weight_emissions(task.emissions.state_logits.view(), &task.mentions, config)?;
            let decoded = viterbi(weighted.view(), model)?;
            resolve(&decoded.states, &task.emissions.location_preds, vocab)
        };
        let track = run().map_err(|e| e.for_entity(task.procedure_id, task.entity_id))?;
        predictions
            .entry(task.procedure_id.to_string())
            .or_insert_with(|| AnnotationGrid::new(task.procedure_id))
            .entries
            .insert(task.entity_id.to_string(), track.into_track());
    }
    Ok(objective(&evaluator::evaluate(&corpus.gold, &predictions, vocab)?))
}

/// Exhaustive search over `grid`; the objective is the one
/// [`super::run_pipeline`] reports. Ties go to the smaller tau_exp, then the
/// smaller tau_imp.
pub fn tune<S: Score>(
    corpus: &Corpus,
    emissions: &Emissions<S>,
    model: &TransitionModel<S>,
    grid: &GridSpec,
) -> Result<TuneResult> {
    if corpus.gold.is_empty() {
        return Err(Error::Validation("tuning needs a corpus with gold grids".into()));
    }
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Config("empty tuning grid".into()));
    }
    // surface missing-emission and shape errors once, before fanning out
    decode_corpus(corpus, emissions, model, &DecodeConfig::unweighted())?;
    let tasks: Vec<Task<'_, S>> = corpus
        .procedures
        .iter()
        .flat_map(|p| p.entities.iter().map(move |e| (p, e)))
        .filter_map(|(p, e)| {
            let em = emissions.get(&p.id)?.entities.get(&e.id)?;
            Some(Task {
                procedure_id: &p.id,
                entity_id: &e.id,
                emissions: em,
                mentions: detect_mentions(p, e),
            })
        })
        .collect();
    let table: Vec<TuneCell> = cells
        .par_iter()
        .map(|&(tau_exp, tau_imp)| {
            let cfg = DecodeConfig::new(tau_exp, tau_imp)?;
            let objective = score_cell(corpus, &tasks, model, &cfg)
                .map_err(|e| e.context(format!("tuning cell (tau_exp={tau_exp}, tau_imp={tau_imp})")))?;
            Ok(TuneCell {
                tau_exp,
                tau_imp,
                objective,
            })
        })
        .collect::<Result<_>>()?;
    let mut best = table[0];
    for c in &table[1..] {
        if c.objective > best.objective {
            best = *c;
        }
    }
    Ok(TuneResult { best, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = GridSpec::default();
        let cells = g.cells();
        assert_eq!(cells.len(), 225);
        assert!(cells.contains(&(0.6, 0.7)));
        assert!(cells.contains(&(1.0, 1.0)));
        assert_eq!(GridSpec::range(0.1, 1.5, 0.1).unwrap(), g.tau_exp);
    }

    #[test]
    fn range_validation() {
        assert!(GridSpec::range(0.0, 1.0, 0.1).is_err());
        assert!(GridSpec::range(0.5, 0.4, 0.1).is_err());
        assert!(GridSpec::range(0.5, 1.0, 0.0).is_err());
        assert_eq!(GridSpec::range(0.5, 0.5, 0.1).unwrap(), vec![0.5]);
    }
}
