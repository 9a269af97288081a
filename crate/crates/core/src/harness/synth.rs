//! Synthetic emissions (and corpora) with controlled, seeded noise.
//!
//! For every (entity, step) with noise rate `e` (the state noise plus any
//! bias that applies to the step) the base logits are `ln(1 - e)` for the
//! gold label and `ln(e / (L - 1))` for every other label, each perturbed
//! by independent standard Gumbel noise. The raw argmax is therefore the
//! gold label with probability exactly `1 - e`, and wrong steps carry the
//! small margins a real model would give them. With `e = 0` the logits are
//! `+10` and `-10` with no perturbation. Each location slot reports the gold
//! answer with probability `1 - location_noise`, else `unknown`.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotationGrid, Corpus, Entity, LocationValue, Procedure, StateVocabulary, Track};
use crate::decoder::{detect_mentions, EmissionSet, Emissions, EntityEmissions};
use crate::error::{Error, Result};

/// Logit margin used when a step has no noise at all.
pub const NOISELESS_LOGIT: f64 = 10.0;

/// Step condition that adds extra state noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BiasKey {
    Explicit,
    Implicit,
    EvenStep,
    OddStep,
}

impl BiasKey {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(BiasKey::Explicit),
            "implicit" => Ok(BiasKey::Implicit),
            "even" => Ok(BiasKey::EvenStep),
            "odd" => Ok(BiasKey::OddStep),
            other => Err(Error::Config(format!("unknown noise bias key {other:?}"))),
        }
    }

    fn applies(self, step: usize, mentioned: bool) -> bool {
        match self {
            BiasKey::Explicit => mentioned,
            BiasKey::Implicit => !mentioned,
            BiasKey::EvenStep => step.is_multiple_of(2),
            BiasKey::OddStep => step % 2 == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub state_noise: f64,
    pub location_noise: f64,
    pub bias: BTreeMap<BiasKey, f64>,
    pub seed: u64,
}

impl OracleConfig {
    pub fn new(state_noise: f64, location_noise: f64, seed: u64) -> Result<Self> {
        let c = Self {
            state_noise,
            location_noise,
            bias: BTreeMap::new(),
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_bias(mut self, key: BiasKey, extra: f64) -> Result<Self> {
        self.bias.insert(key, extra);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |x: f64| (0.0..1.0).contains(&x);
        if !in_range(self.state_noise) || !in_range(self.location_noise) {
            return Err(Error::Config(format!(
                "noise rates must lie in [0, 1), got state {} and location {}",
                self.state_noise, self.location_noise
            )));
        }
        for (key, &extra) in &self.bias {
            if !in_range(extra) {
                return Err(Error::Config(format!("bias {key:?} must lie in [0, 1), got {extra}")));
            }
        }
        // worst case: one mention key and one parity key on the same step
        let worst = |keys: &[BiasKey]| keys.iter().map(|k| self.bias.get(k).copied().unwrap_or(0.0)).fold(0.0, f64::max);
        let total = self.state_noise
            + worst(&[BiasKey::Explicit, BiasKey::Implicit])
            + worst(&[BiasKey::EvenStep, BiasKey::OddStep]);
        if !in_range(total) {
            return Err(Error::Config(format!("biased state noise reaches {total}, must stay below 1")));
        }
        Ok(())
    }

    /// Noise rate for a 1-based step.
    pub fn step_noise(&self, step: usize, mentioned: bool) -> f64 {
        self.state_noise
            + self
                .bias
                .iter()
                .filter(|(k, _)| k.applies(step, mentioned))
                .map(|(_, v)| v)
                .sum::<f64>()
    }
}

fn logits_row(gold: usize, labels: usize, noise: f64) -> Vec<f64> {
    let (hi, lo) = if noise == 0.0 {
        (NOISELESS_LOGIT, -NOISELESS_LOGIT)
    } else {
        ((1.0 - noise).ln(), (noise / (labels - 1) as f64).ln())
    };
    (0..labels).map(|y| if y == gold { hi } else { lo }).collect()
}

/// Noisy emissions for every gold track of `corpus`, in (procedure, entity)
/// order from a single seeded stream.
pub fn synth_emissions(corpus: &Corpus, vocab: &StateVocabulary, config: &OracleConfig) -> Result<Emissions<f64>> {
    config.validate()?;
    let labels = vocab.len();
    if labels < 2 {
        return Err(Error::Config("synthetic emissions need at least two labels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Emissions::new();
    let mut procedures: Vec<&Procedure> = corpus.procedures.iter().collect();
    procedures.sort_by(|a, b| a.id.cmp(&b.id));
    for procedure in procedures {
        let grid = corpus.gold.get(&procedure.id).ok_or_else(|| {
            Error::Validation(format!("procedure {} has no gold grid to synthesize from", procedure.id))
        })?;
        let mut set = EmissionSet {
            procedure_id: procedure.id.clone(),
            entities: BTreeMap::new(),
        };
        for (entity_id, track) in &grid.entries {
            let entity = procedure.entity(entity_id).expect("gold entities belong to their procedure");
            let flags = detect_mentions(procedure, entity);
            let steps = track.num_steps();
            let mut flat = Vec::with_capacity(steps * labels);
            for (i, &gold) in track.states.iter().enumerate() {
                let noise = config.step_noise(i + 1, flags[i]);
                let mut row = logits_row(gold, labels, noise);
                if noise > 0.0 {
                    for v in &mut row {
                        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                        *v += -(-u.ln()).ln();
                    }
                }
                flat.extend(row);
            }
            let location_preds = track
                .locations
                .iter()
                .map(|l| {
                    if rng.gen::<f64>() < config.location_noise {
                        "unknown".to_string()
                    } else {
                        l.as_answer_str().to_string()
                    }
                })
                .collect();
            set.entities.insert(
                entity_id.clone(),
                EntityEmissions {
                    state_logits: Array2::from_shape_vec((steps, labels), flat).expect("row lengths"),
                    location_preds,
                },
            );
        }
        out.insert(procedure.id.clone(), set);
    }
    Ok(out)
}

const ENTITY_POOL: &[&str] = &[
    "water", "sediment", "magma", "seed", "sugar", "oxygen", "carbon dioxide", "glucose", "ice", "vapor",
    "spore", "pollen", "nectar", "lava", "salt", "mineral", "larva", "egg", "acid", "energy",
];

const LOCATION_POOL: &[&str] = &[
    "soil", "river", "ocean", "air", "leaf", "root", "cloud", "ground", "lake", "sky", "dam", "pipe", "cell",
    "stem", "crust", "nest", "hive", "flower", "bloodstream", "valley",
];

const VERBS: &[&str] = &["travel", "settle", "change", "form", "gather", "break down", "spread", "collect"];

/// Builds a ProPara-style synthetic corpus whose gold grids are consistent
/// by construction. Some procedures contain a conversion (one entity
/// destroyed where another is created at the same step).
pub fn synth_corpus(procedures: usize, seed: u64) -> Result<Corpus> {
    let vocab = StateVocabulary::propara();
    let id = |l: &str| vocab.require(l).expect("propara label");
    let (create, exist, move_, destroy, before, after) = (
        id("create"),
        id("exist"),
        id("move"),
        id("destroy"),
        id("outside_before"),
        id("outside_after"),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::default();
    for p in 0..procedures {
        let steps = rng.gen_range(4..=9);
        let n_entities = rng.gen_range(2..=5);
        let mut names: Vec<&str> = ENTITY_POOL.to_vec();
        names.shuffle(&mut rng);
        names.truncate(n_entities);
        let pick_loc = |rng: &mut ChaCha8Rng, not: Option<&str>| loop {
            let l = LOCATION_POOL[rng.gen_range(0..LOCATION_POOL.len())];
            if Some(l) != not {
                return l;
            }
        };

        let mut tracks: Vec<(usize, Vec<usize>, Vec<LocationValue>)> = Vec::new();
        let mut conversion: Option<(usize, String)> = None;
        for (i, _) in names.iter().enumerate() {
            let mut states = Vec::with_capacity(steps);
            let mut locs = Vec::with_capacity(steps + 1);
            let created_at = match conversion.take() {
                Some((c, at)) => Some((c, Some(at))),
                None if rng.gen_bool(0.4) => Some((rng.gen_range(1..=steps), None)),
                None => None,
            };
            let destroyed_at = if rng.gen_bool(0.35) {
                let lo = created_at.as_ref().map_or(1, |(c, _)| c + 1);
                (lo <= steps).then(|| rng.gen_range(lo..=steps))
            } else {
                None
            };
            let mut here: Option<String> = match created_at {
                Some(_) => None,
                None => Some(pick_loc(&mut rng, None).to_string()),
            };
            locs.push(here.as_deref().map_or(LocationValue::Nonexistent, LocationValue::span));
            for t in 1..=steps {
                let state = match (&created_at, destroyed_at) {
                    (Some((c, _)), _) if t < *c => before,
                    (Some((c, _)), _) if t == *c => create,
                    (_, Some(d)) if t == d => destroy,
                    (_, Some(d)) if t > d => after,
                    _ if rng.gen_bool(0.3) => move_,
                    _ => exist,
                };
                here = if state == create {
                    let at = created_at.as_ref().and_then(|(_, at)| at.clone());
                    Some(at.unwrap_or_else(|| pick_loc(&mut rng, None).to_string()))
                } else if state == move_ {
                    Some(pick_loc(&mut rng, here.as_deref()).to_string())
                } else if state == destroy || state == before || state == after {
                    None
                } else {
                    here
                };
                states.push(state);
                locs.push(here.as_deref().map_or(LocationValue::Nonexistent, LocationValue::span));
            }
            // pair the next entity's creation with this destruction
            if let Some(d) = destroyed_at {
                if i + 1 < names.len() && rng.gen_bool(0.5) {
                    if let LocationValue::Span(at) = &locs[d - 1] {
                        conversion = Some((d, at.clone()));
                    }
                }
            }
            tracks.push((i, states, locs));
        }

        let step_texts: Vec<String> = (1..=steps)
            .map(|t| {
                let mut mentioned: Vec<&str> = Vec::new();
                let mut place: Option<String> = None;
                for (i, states, locs) in &tracks {
                    let s = states[t - 1];
                    let eventful = s == create || s == move_ || s == destroy;
                    let p = if eventful { 0.85 } else { 0.15 };
                    if s != before && s != after && rng.gen_bool(p) {
                        mentioned.push(names[*i]);
                        if let LocationValue::Span(l) = &locs[t] {
                            place.get_or_insert_with(|| l.clone());
                        }
                    }
                }
                let verb = VERBS[rng.gen_range(0..VERBS.len())];
                match (mentioned.is_empty(), place) {
                    (true, _) => format!("Step {t} of the process continues quietly."),
                    (false, Some(l)) => format!("The {} {verb} in the {l}.", mentioned.join(" and the ")),
                    (false, None) => format!("The {} {verb}.", mentioned.join(" and the ")),
                }
            })
            .collect();

        let entities: Vec<Entity> = names.iter().map(|n| Entity::from_raw(n, n)).collect::<Result<_>>()?;
        let pid = format!("synth-{p:05}");
        let procedure = Procedure::new(&pid, step_texts, entities)?;
        let mut grid = AnnotationGrid::new(&pid);
        for (i, states, locations) in tracks {
            grid.entries.insert(names[i].to_string(), Track { states, locations });
        }
        corpus.gold.insert(pid, grid);
        corpus.procedures.push(procedure);
    }
    Ok(corpus)
}
