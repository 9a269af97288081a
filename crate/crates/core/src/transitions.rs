//! Start and transition scores estimated from gold state sequences.
//!
//! `trans[p][q] = ln(count(p -> q) / count(p -> *))` and
//! `start[p] = ln(count(first = p) / #sequences)`. Pairs never observed get
//! negative infinity, which the decoder treats as a hard constraint.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationGrid, StateVocabulary};
use crate::error::{Error, Result};
use crate::scalar::Score;

/// File marker for an impossible (negative infinity) score.
pub const NEG_INF_MARKER: &str = "-inf";

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel<S: Score> {
    vocab: StateVocabulary,
    start: Vec<S>,
    /// Row-major `|labels| x |labels|`, row = previous state.
    trans: Vec<S>,
    start_counts: Vec<u64>,
    trans_counts: Vec<u64>,
    sequences: u64,
}

impl<S: Score> TransitionModel<S> {
    /// Counts starts and transitions over `sequences` (label indices).
    pub fn estimate<'a, I>(sequences: I, vocab: &StateVocabulary) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let n = vocab.len();
        let mut start_counts = vec![0u64; n];
        let mut trans_counts = vec![0u64; n * n];
        let mut total = 0u64;
        for seq in sequences {
            if let Some(&bad) = seq.iter().find(|&&s| s >= n) {
                return Err(Error::UnknownLabel {
                    label: format!("#{bad}"),
                    vocabulary: vocab.name().to_string(),
                });
            }
            let Some(&first) = seq.first() else { continue };
            total += 1;
            start_counts[first] += 1;
            for w in seq.windows(2) {
                trans_counts[w[0] * n + w[1]] += 1;
            }
        }
        if total == 0 {
            return Err(Error::Validation("no gold state sequences to estimate transitions from".into()));
        }
        Ok(Self::from_counts(vocab.clone(), start_counts, trans_counts, total))
    }

    /// Estimates from every track of the given gold grids.
    pub fn estimate_from_grids<'a>(
        grids: impl IntoIterator<Item = &'a AnnotationGrid>,
        vocab: &StateVocabulary,
    ) -> Result<Self> {
        let seqs: Vec<&[usize]> = grids
            .into_iter()
            .flat_map(|g| g.entries.values().map(|t| t.states.as_slice()))
            .collect();
        Self::estimate(seqs, vocab)
    }

    fn from_counts(vocab: StateVocabulary, start_counts: Vec<u64>, trans_counts: Vec<u64>, sequences: u64) -> Self {
        let n = vocab.len();
        let log_ratio = |num: u64, den: u64| {
            if num == 0 {
                S::neg_infinity()
            } else {
                S::from_f64_lossy((num as f64 / den as f64).ln())
            }
        };
        let start = start_counts.iter().map(|&c| log_ratio(c, sequences)).collect();
        let mut trans = vec![S::neg_infinity(); n * n];
        for p in 0..n {
            let row = &trans_counts[p * n..(p + 1) * n];
            let out: u64 = row.iter().sum();
            for q in 0..n {
                trans[p * n + q] = log_ratio(row[q], out);
            }
        }
        Self {
            vocab,
            start,
            trans,
            start_counts,
            trans_counts,
            sequences,
        }
    }

    /// Builds a model directly from scores; counts are left at zero.
    pub fn from_scores(vocab: StateVocabulary, start: Vec<S>, trans: Vec<Vec<S>>) -> Result<Self> {
        let n = vocab.len();
        if start.len() != n || trans.len() != n || trans.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension(format!("scores must be {n} and {n}x{n}")));
        }
        if start.iter().chain(trans.iter().flatten()).any(|s| s.is_nan() || *s == S::infinity()) {
            return Err(Error::Config("scores must be finite or negative infinity".into()));
        }
        Ok(Self {
            vocab,
            start,
            trans: trans.into_iter().flatten().collect(),
            start_counts: vec![0; n],
            trans_counts: vec![0; n * n],
            sequences: 0,
        })
    }

    pub fn vocab(&self) -> &StateVocabulary {
        &self.vocab
    }

    pub fn num_labels(&self) -> usize {
        self.vocab.len()
    }

    pub fn start(&self, label: usize) -> S {
        self.start[label]
    }

    pub fn start_scores(&self) -> &[S] {
        &self.start
    }

    pub fn trans(&self, from: usize, to: usize) -> S {
        self.trans[from * self.num_labels() + to]
    }

    pub fn start_count(&self, label: usize) -> u64 {
        self.start_counts[label]
    }

    pub fn trans_count(&self, from: usize, to: usize) -> u64 {
        self.trans_counts[from * self.num_labels() + to]
    }

    pub fn sequences(&self) -> u64 {
        self.sequences
    }

    /// Observed transitions seen fewer than `min_count` times, for audit.
    /// Scores are not affected.
    pub fn rare_transitions(&self, min_count: u64) -> Vec<(usize, usize, u64)> {
        let n = self.num_labels();
        let mut out = Vec::new();
        for p in 0..n {
            for q in 0..n {
                let c = self.trans_count(p, q);
                if c > 0 && c < min_count {
                    out.push((p, q, c));
                }
            }
        }
        out
    }

    /// Copy with every negative-infinity score replaced by `penalty`.
    pub fn relaxed(&self, penalty: S) -> Self {
        let fix = |s: &S| if s.is_infinite() { penalty } else { *s };
        Self {
            start: self.start.iter().map(fix).collect(),
            trans: self.trans.iter().map(fix).collect(),
            ..self.clone()
        }
    }

    /// Copy with all scores multiplied by `factor > 0`.
    pub fn scaled(&self, factor: S) -> Self {
        Self {
            start: self.start.iter().map(|&s| s * factor).collect(),
            trans: self.trans.iter().map(|&s| s * factor).collect(),
            ..self.clone()
        }
    }

    /// Converts every score to another float type.
    pub fn cast<T: Score>(&self) -> TransitionModel<T> {
        let conv = |s: &S| T::from_f64_lossy(s.to_f64_lossy());
        TransitionModel {
            vocab: self.vocab.clone(),
            start: self.start.iter().map(conv).collect(),
            trans: self.trans.iter().map(conv).collect(),
            start_counts: self.start_counts.clone(),
            trans_counts: self.trans_counts.clone(),
            sequences: self.sequences,
        }
    }

    /// True iff some label sequence of length `steps` has a finite
    /// start + transition score.
    pub fn path_exists(&self, steps: usize) -> bool {
        let n = self.num_labels();
        if steps == 0 {
            return true;
        }
        let mut reach: Vec<bool> = self.start.iter().map(|s| s.is_finite()).collect();
        for _ in 1..steps {
            let next: Vec<bool> = (0..n)
                .map(|q| (0..n).any(|p| reach[p] && self.trans(p, q).is_finite()))
                .collect();
            reach = next;
        }
        reach.iter().any(|&r| r)
    }

    pub fn to_file(&self) -> ModelFile {
        let n = self.num_labels();
        ModelFile {
            vocabulary: self.vocab.name().to_string(),
            labels: self.vocab.labels().to_vec(),
            sequences: self.sequences,
            start_scores: self.start.iter().map(|&s| format_score(s)).collect(),
            trans_scores: (0..n)
                .map(|p| (0..n).map(|q| format_score(self.trans(p, q))).collect())
                .collect(),
            start_counts: self.start_counts.clone(),
            trans_counts: (0..n).map(|p| self.trans_counts[p * n..(p + 1) * n].to_vec()).collect(),
        }
    }

    pub fn from_file(file: &ModelFile, vocab: &StateVocabulary) -> Result<Self> {
        let n = vocab.len();
        if file.labels != vocab.labels() {
            return Err(Error::Validation(format!(
                "model labels {:?} do not match vocabulary {} {:?}",
                file.labels,
                vocab.name(),
                vocab.labels()
            )));
        }
        let dims_ok = file.start_scores.len() == n
            && file.start_counts.len() == n
            && file.trans_scores.len() == n
            && file.trans_counts.len() == n
            && file.trans_scores.iter().all(|r| r.len() == n)
            && file.trans_counts.iter().all(|r| r.len() == n);
        if !dims_ok {
            return Err(Error::Validation(format!("model tables must be {n} and {n}x{n}")));
        }
        Ok(Self {
            vocab: vocab.clone(),
            start: file.start_scores.iter().map(|s| parse_score(s)).collect::<Result<_>>()?,
            trans: file
                .trans_scores
                .iter()
                .flatten()
                .map(|s| parse_score(s))
                .collect::<Result<_>>()?,
            start_counts: file.start_counts.clone(),
            trans_counts: file.trans_counts.iter().flatten().copied().collect(),
            sequences: file.sequences,
        })
    }

    /// Deterministic pretty JSON.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, vocab: &StateVocabulary) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_file(&file, vocab)
    }

    /// Start and transition tables keyed by label, for reporting.
    pub fn score_table(&self) -> BTreeMap<(String, String), f64> {
        let n = self.num_labels();
        let mut out = BTreeMap::new();
        for p in 0..n {
            for q in 0..n {
                out.insert(
                    (self.vocab.label(p).to_string(), self.vocab.label(q).to_string()),
                    self.trans(p, q).to_f64_lossy(),
                );
            }
        }
        out
    }
}

/// On-disk model layout; field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub vocabulary: String,
    pub labels: Vec<String>,
    pub sequences: u64,
    pub start_scores: Vec<String>,
    pub trans_scores: Vec<Vec<String>>,
    pub start_counts: Vec<u64>,
    pub trans_counts: Vec<Vec<u64>>,
}

/// 17 significant digits, or `-inf`.
pub fn format_score<S: Score>(s: S) -> String {
    if s == S::neg_infinity() {
        NEG_INF_MARKER.to_string()
    } else {
        format!("{:.16e}", s.to_f64_lossy())
    }
}

pub fn parse_score<S: Score>(s: &str) -> Result<S> {
    if s.trim() == NEG_INF_MARKER {
        return Ok(S::neg_infinity());
    }
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        context: "model file".into(),
        message: format!("bad score {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            context: "model file".into(),
            message: format!("score {s:?} must be finite or {NEG_INF_MARKER:?}"),
        });
    }
    Ok(S::from_f64_lossy(v))
}
