//! Scoring of predicted grids against gold.
//!
//! Document level extracts four tuple sets per procedure and scores them by
//! exact match over the whole split:
//!
//! * inputs: entities with a location at slot 0 and none at slot T
//! * outputs: entities with no location at slot 0 and one at slot T
//! * conversions: `(t, destroyed, created, L)` when an entity destroyed at
//!   `t` (located at `L` in slot `t-1`) and an entity created at `t`
//!   (located at `L` in slot `t`) share `L != -`
//! * moves: `(entity, t, from, to)` for every move step
//!
//! Sentence level scores `(procedure, entity, event)` triples for
//! create/destroy/move: Cat-1 whether the event happens at all, Cat-2 the
//! exact step set, Cat-3 the locations at every gold event step.
//!
//! Locations are compared through [`LocationKey`], so `?` only matches `?`.
//! Entities missing from the predictions count as empty tracks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::corpus::{AnnotationGrid, LocationKey, StateVocabulary, Track};
use crate::error::{Error, Result};

pub type GridMap = BTreeMap<String, AnnotationGrid>;

/// `(procedure id, entity id)`.
pub type EntityKey = (String, String);

/// Set-match counts. Precision is 1 when nothing was predicted and recall
/// is 1 when nothing was expected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Prf {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Prf {
    pub fn from_sets<T: Ord>(gold: &BTreeSet<T>, pred: &BTreeSet<T>) -> Self {
        Self {
            matched: gold.intersection(pred).count(),
            predicted: pred.len(),
            gold: gold.len(),
        }
    }

    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            1.0
        } else {
            self.matched as f64 / self.predicted as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            1.0
        } else {
            self.matched as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

impl Serialize for Prf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Prf", 6)?;
        st.serialize_field("matched", &self.matched)?;
        st.serialize_field("predicted", &self.predicted)?;
        st.serialize_field("gold", &self.gold)?;
        st.serialize_field("precision", &self.precision())?;
        st.serialize_field("recall", &self.recall())?;
        st.serialize_field("f1", &self.f1())?;
        st.end()
    }
}

/// Fraction `correct / total`, 1 when there is nothing to score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Ratio {
    pub correct: usize,
    pub total: usize,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    fn add(&mut self, ok: bool) {
        self.total += 1;
        if ok {
            self.correct += 1;
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Ratio", 3)?;
        st.serialize_field("correct", &self.correct)?;
        st.serialize_field("total", &self.total)?;
        st.serialize_field("score", &self.value())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DocLevel {
    pub inputs: Prf,
    pub outputs: Prf,
    pub conversions: Prf,
    pub moves: Prf,
}

impl DocLevel {
    pub fn questions(&self) -> [(&'static str, Prf); 4] {
        [
            ("inputs", self.inputs),
            ("outputs", self.outputs),
            ("conversions", self.conversions),
            ("moves", self.moves),
        ]
    }

    pub fn macro_precision(&self) -> f64 {
        self.questions().iter().map(|(_, q)| q.precision()).sum::<f64>() / 4.0
    }

    pub fn macro_recall(&self) -> f64 {
        self.questions().iter().map(|(_, q)| q.recall()).sum::<f64>() / 4.0
    }

    /// Mean of the four per-question F1 scores.
    pub fn macro_f1(&self) -> f64 {
        self.questions().iter().map(|(_, q)| q.f1()).sum::<f64>() / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SentenceLevel {
    pub cat1: Ratio,
    pub cat2: Ratio,
    pub cat3: Ratio,
}

impl SentenceLevel {
    pub fn macro_avg(&self) -> f64 {
        (self.cat1.value() + self.cat2.value() + self.cat3.value()) / 3.0
    }

    /// Pooled over every scored item of the three categories.
    pub fn micro_avg(&self) -> f64 {
        let c = self.cat1.correct + self.cat2.correct + self.cat3.correct;
        let t = self.cat1.total + self.cat2.total + self.cat3.total;
        Ratio { correct: c, total: t }.value()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SplitAccuracy {
    pub explicit: Ratio,
    pub implicit: Ratio,
}

impl SplitAccuracy {
    pub fn pair(&self) -> (f64, f64) {
        (self.explicit.value(), self.implicit.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitReport {
    pub raw_argmax: SplitAccuracy,
    pub decoded: SplitAccuracy,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub doc_level: Option<DocLevel>,
    pub sentence_level: Option<SentenceLevel>,
    pub recipes_location: Option<Prf>,
    pub split: Option<SplitReport>,
    pub prediction_violations: usize,
    pub per_procedure: Option<BTreeMap<String, EvalReport>>,
}

impl Serialize for EvalReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct DocOut<'a> {
            #[serde(flatten)]
            questions: &'a DocLevel,
            macro_precision: f64,
            macro_recall: f64,
            macro_f1: f64,
        }
        #[derive(Serialize)]
        struct SentOut<'a> {
            #[serde(flatten)]
            cats: &'a SentenceLevel,
            macro_avg: f64,
            micro_avg: f64,
        }
        let mut st = s.serialize_struct("EvalReport", 6)?;
        st.serialize_field(
            "doc_level",
            &self.doc_level.as_ref().map(|d| DocOut {
                questions: d,
                macro_precision: d.macro_precision(),
                macro_recall: d.macro_recall(),
                macro_f1: d.macro_f1(),
            }),
        )?;
        st.serialize_field(
            "sentence_level",
            &self.sentence_level.as_ref().map(|c| SentOut {
                cats: c,
                macro_avg: c.macro_avg(),
                micro_avg: c.micro_avg(),
            }),
        )?;
        st.serialize_field("recipes_location", &self.recipes_location)?;
        st.serialize_field("split", &self.split)?;
        st.serialize_field("prediction_violations", &self.prediction_violations)?;
        if let Some(per) = &self.per_procedure {
            st.serialize_field("per_procedure", per)?;
        }
        st.end()
    }
}

impl EvalReport {
    /// Deterministic pretty JSON.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text table.
    pub fn to_table(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if let Some(d) = &self.doc_level {
            writeln!(out, "{:<16}{:>10}{:>10}{:>10}", "document", "P", "R", "F1")?;
            for (name, q) in d.questions() {
                writeln!(out, "{:<16}{:>10.4}{:>10.4}{:>10.4}", name, q.precision(), q.recall(), q.f1())?;
            }
            writeln!(
                out,
                "{:<16}{:>10.4}{:>10.4}{:>10.4}",
                "macro",
                d.macro_precision(),
                d.macro_recall(),
                d.macro_f1()
            )?;
        }
        if let Some(c) = &self.sentence_level {
            writeln!(out, "{:<16}{:>10}{:>10}{:>10}", "sentence", "score", "correct", "total")?;
            for (name, r) in [("cat1", c.cat1), ("cat2", c.cat2), ("cat3", c.cat3)] {
                writeln!(out, "{:<16}{:>10.4}{:>10}{:>10}", name, r.value(), r.correct, r.total)?;
            }
            writeln!(out, "{:<16}{:>10.4}", "macro", c.macro_avg())?;
            writeln!(out, "{:<16}{:>10.4}", "micro", c.micro_avg())?;
        }
        if let Some(q) = &self.recipes_location {
            writeln!(out, "{:<16}{:>10}{:>10}{:>10}", "location change", "P", "R", "F1")?;
            writeln!(out, "{:<16}{:>10.4}{:>10.4}{:>10.4}", "all", q.precision(), q.recall(), q.f1())?;
        }
        if let Some(s) = &self.split {
            writeln!(out, "{:<16}{:>10}{:>10}", "state accuracy", "explicit", "implicit")?;
            for (name, a) in [("raw argmax", s.raw_argmax), ("decoded", s.decoded)] {
                writeln!(out, "{:<16}{:>10.4}{:>10.4}", name, a.explicit.value(), a.implicit.value())?;
            }
        }
        writeln!(out, "prediction consistency violations: {}", self.prediction_violations)?;
        f.write_str(&out)
    }
}

/// Rejects predictions for procedures, entities or step counts that the gold
/// does not have.
pub fn check_coverage(gold: &GridMap, pred: &GridMap) -> Result<()> {
    for (pid, pg) in pred {
        let gg = gold
            .get(pid)
            .ok_or_else(|| Error::Validation(format!("prediction for procedure {pid} has no gold")))?;
        for (eid, pt) in &pg.entries {
            let gt = gg.entries.get(eid).ok_or_else(|| {
                Error::Validation(format!("prediction for procedure {pid}, entity {eid} has no gold"))
            })?;
            if pt.states.len() != gt.states.len() || pt.locations.len() != gt.locations.len() {
                return Err(Error::Validation(format!(
                    "procedure {pid}, entity {eid}: prediction covers {} steps, gold {}",
                    pt.states.len(),
                    gt.states.len()
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Default)]
struct DocTuples {
    inputs: BTreeSet<EntityKey>,
    outputs: BTreeSet<EntityKey>,
    conversions: BTreeSet<(String, usize, String, String, LocationKey)>,
    moves: BTreeSet<(String, String, usize, LocationKey, LocationKey)>,
}

fn doc_tuples(grids: &GridMap, vocab: &StateVocabulary) -> DocTuples {
    let roles = vocab.roles();
    let mut out = DocTuples::default();
    for (pid, grid) in grids {
        let mut destroyed: BTreeMap<usize, Vec<(&str, LocationKey)>> = BTreeMap::new();
        let mut created: BTreeMap<usize, Vec<(&str, LocationKey)>> = BTreeMap::new();
        for (eid, track) in &grid.entries {
            let steps = track.num_steps();
            let key = (pid.clone(), eid.clone());
            let first = &track.locations[0];
            let last = &track.locations[steps];
            if !first.is_nonexistent() && last.is_nonexistent() {
                out.inputs.insert(key.clone());
            }
            if first.is_nonexistent() && !last.is_nonexistent() {
                out.outputs.insert(key.clone());
            }
            for t in 1..=steps {
                let s = track.states[t - 1];
                let before = track.locations[t - 1].key();
                let after = track.locations[t].key();
                if roles.destroy == Some(s) {
                    destroyed.entry(t).or_default().push((eid, before.clone()));
                }
                if roles.create == Some(s) {
                    created.entry(t).or_default().push((eid, after.clone()));
                }
                if roles.move_ == Some(s) {
                    out.moves.insert((pid.clone(), eid.clone(), t, before, after));
                }
            }
        }
        for (t, ds) in &destroyed {
            let Some(cs) = created.get(t) else { continue };
            for (d, dl) in ds {
                for (c, cl) in cs {
                    if dl == cl && *dl != LocationKey::Nonexistent {
                        out.conversions.insert((pid.clone(), *t, d.to_string(), c.to_string(), dl.clone()));
                    }
                }
            }
        }
    }
    out
}

pub fn eval_document_level(gold: &GridMap, pred: &GridMap, vocab: &StateVocabulary) -> Result<DocLevel> {
    check_coverage(gold, pred)?;
    let g = doc_tuples(gold, vocab);
    let p = doc_tuples(pred, vocab);
    Ok(DocLevel {
        inputs: Prf::from_sets(&g.inputs, &p.inputs),
        outputs: Prf::from_sets(&g.outputs, &p.outputs),
        conversions: Prf::from_sets(&g.conversions, &p.conversions),
        moves: Prf::from_sets(&g.moves, &p.moves),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Create,
    Destroy,
    Move,
}

/// Steps at which `event` happens, with the locations it involves.
fn event_steps(track: &Track, event: Event, vocab: &StateVocabulary) -> BTreeMap<usize, Vec<LocationKey>> {
    let roles = vocab.roles();
    let label = match event {
        Event::Create => roles.create,
        Event::Destroy => roles.destroy,
        Event::Move => roles.move_,
    };
    let mut out = BTreeMap::new();
    for t in 1..=track.num_steps() {
        if label != Some(track.states[t - 1]) {
            continue;
        }
        let before = track.locations[t - 1].key();
        let after = track.locations[t].key();
        let args = match event {
            Event::Create => vec![after],
            Event::Destroy => vec![before],
            Event::Move => vec![before, after],
        };
        out.insert(t, args);
    }
    out
}

pub fn eval_sentence_level(gold: &GridMap, pred: &GridMap, vocab: &StateVocabulary) -> Result<SentenceLevel> {
    check_coverage(gold, pred)?;
    let mut cat1 = Ratio::default();
    let mut cat2 = Ratio::default();
    let mut cat3 = Ratio::default();
    for (pid, grid) in gold {
        for (eid, gt) in &grid.entries {
            let pt = pred.get(pid).and_then(|g| g.entries.get(eid));
            for event in [Event::Create, Event::Destroy, Event::Move] {
                let g = event_steps(gt, event, vocab);
                let p = pt.map(|t| event_steps(t, event, vocab)).unwrap_or_default();
                cat1.add(g.is_empty() == p.is_empty());
                if g.is_empty() {
                    continue;
                }
                cat2.add(g.keys().eq(p.keys()));
                cat3.add(g.iter().all(|(t, args)| p.get(t) == Some(args)));
            }
        }
    }
    Ok(SentenceLevel { cat1, cat2, cat3 })
}

fn location_changes(grids: &GridMap) -> BTreeSet<(String, String, usize, LocationKey)> {
    let mut out = BTreeSet::new();
    for (pid, grid) in grids {
        for (eid, track) in &grid.entries {
            for t in 1..track.locations.len() {
                if !track.locations[t].same_as(&track.locations[t - 1]) {
                    out.insert((pid.clone(), eid.clone(), t, track.locations[t].key()));
                }
            }
        }
    }
    out
}

/// Location-change tuples `(entity, t, loc[t])` wherever `loc[t] != loc[t-1]`.
pub fn eval_recipes_locations(gold: &GridMap, pred: &GridMap, vocab: &StateVocabulary) -> Result<Prf> {
    if !vocab.roles().is_empty() {
        return Err(Error::Config(format!(
            "location-change scoring needs a presence vocabulary, got {}",
            vocab.name()
        )));
    }
    check_coverage(gold, pred)?;
    Ok(Prf::from_sets(&location_changes(gold), &location_changes(pred)))
}

/// Per-step state accuracy, partitioned by mention flag. Missing
/// predictions count as wrong.
pub fn eval_split(
    gold: &GridMap,
    pred_states: &BTreeMap<EntityKey, Vec<usize>>,
    mentions: &BTreeMap<EntityKey, Vec<bool>>,
) -> Result<SplitAccuracy> {
    let mut acc = SplitAccuracy::default();
    for (pid, grid) in gold {
        for (eid, gt) in &grid.entries {
            let key = (pid.clone(), eid.clone());
            let flags = mentions.get(&key).ok_or_else(|| {
                Error::Validation(format!("no mention flags for procedure {pid}, entity {eid}"))
            })?;
            if flags.len() != gt.num_steps() {
                return Err(Error::Dimension(format!(
                    "procedure {pid}, entity {eid}: {} mention flags for {} steps",
                    flags.len(),
                    gt.num_steps()
                )));
            }
            let pred = pred_states.get(&key);
            for (t, &gold_state) in gt.states.iter().enumerate() {
                let ok = pred.and_then(|p| p.get(t)) == Some(&gold_state);
                if flags[t] {
                    acc.explicit.add(ok);
                } else {
                    acc.implicit.add(ok);
                }
            }
        }
    }
    Ok(acc)
}

/// Runs the metrics that apply to `vocab`: document and sentence level for
/// event vocabularies, location changes for presence vocabularies.
pub fn evaluate(gold: &GridMap, pred: &GridMap, vocab: &StateVocabulary) -> Result<EvalReport> {
    check_coverage(gold, pred)?;
    let mut report = EvalReport {
        prediction_violations: crate::corpus::grid_violations(pred, vocab).len(),
        ..EvalReport::default()
    };
    if vocab.roles().is_empty() {
        report.recipes_location = Some(eval_recipes_locations(gold, pred, vocab)?);
    } else {
        report.doc_level = Some(eval_document_level(gold, pred, vocab)?);
        report.sentence_level = Some(eval_sentence_level(gold, pred, vocab)?);
    }
    Ok(report)
}

/// [`evaluate`] restricted to each gold procedure in turn.
pub fn evaluate_per_procedure(
    gold: &GridMap,
    pred: &GridMap,
    vocab: &StateVocabulary,
) -> Result<BTreeMap<String, EvalReport>> {
    let mut out = BTreeMap::new();
    for (pid, g) in gold {
        let gold_one = GridMap::from([(pid.clone(), g.clone())]);
        let pred_one: GridMap = pred.get(pid).map(|p| (pid.clone(), p.clone())).into_iter().collect();
        out.insert(pid.clone(), evaluate(&gold_one, &pred_one, vocab)?);
    }
    Ok(out)
}
