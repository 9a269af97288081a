//! Integrates decoded states with per-slot location answers.
//!
//! States always win. A forward pass over the slots applies:
//!
//! * R1: slot 0 is `-` when step 1 creates the entity or the entity does
//!   not exist at step 1 (event vocabularies only); otherwise the slot-0
//!   prediction.
//! * R2: create at `t` forces slot `t-1` to `-` (and, through a run of
//!   exist steps, the slots those steps copied from); slot `t` is the
//!   prediction, with `none` upgraded to `?`.
//! * R3: destroy or a nonexistent state at `t` forces slot `t` to `-`.
//! * R4: exist at `t` copies slot `t-1`.
//! * R5: move at `t` takes the prediction; `none` or a repeat of slot `t-1`
//!   becomes `?`.
//!
//! States without a role (Recipes `exist`) take the prediction as is.
//! Every slot whose final value differs from its parsed prediction gets a
//! [`Repair`] entry.

use std::fmt;

use crate::corpus::{LocationValue, StateVocabulary, Track};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RepairRule {
    SlotZero,
    Create,
    Gone,
    Exist,
    Move,
}

impl fmt::Display for RepairRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairRule::SlotZero => "R1",
            RepairRule::Create => "R2",
            RepairRule::Gone => "R3",
            RepairRule::Exist => "R4",
            RepairRule::Move => "R5",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repair {
    pub slot: usize,
    pub original: LocationValue,
    pub repaired: LocationValue,
    pub rule: RepairRule,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedTrack {
    pub states: Vec<usize>,
    pub locations: Vec<LocationValue>,
    pub repairs: Vec<Repair>,
}

impl ResolvedTrack {
    pub fn track(&self) -> Track {
        Track {
            states: self.states.clone(),
            locations: self.locations.clone(),
        }
    }

    pub fn into_track(self) -> Track {
        Track {
            states: self.states,
            locations: self.locations,
        }
    }
}

/// Whether any location sequence satisfies the consistency rules for
/// `states`. Fails exactly when some create is preceded, through a run of
/// exist steps, by a create or move (the slot would need to be both `-`
/// and not `-`).
pub fn is_satisfiable(states: &[usize], vocab: &StateVocabulary) -> bool {
    let roles = vocab.roles();
    for t in 1..=states.len() {
        if roles.create != Some(states[t - 1]) {
            continue;
        }
        let mut k = t - 1;
        while k >= 1 && roles.exist == Some(states[k - 1]) {
            k -= 1;
        }
        if k >= 1 && (roles.create == Some(states[k - 1]) || roles.move_ == Some(states[k - 1])) {
            return false;
        }
    }
    true
}

/// Resolves one entity. For satisfiable state sequences (see
/// [`is_satisfiable`]) the result passes [`crate::corpus::check_track`].
pub fn resolve(states: &[usize], location_preds: &[String], vocab: &StateVocabulary) -> Result<ResolvedTrack> {
    let steps = states.len();
    if location_preds.len() != steps + 1 {
        return Err(Error::Dimension(format!(
            "{steps} states need {} location predictions, got {}",
            steps + 1,
            location_preds.len()
        )));
    }
    if let Some(&bad) = states.iter().find(|&&s| s >= vocab.len()) {
        return Err(Error::UnknownLabel {
            label: format!("#{bad}"),
            vocabulary: vocab.name().to_string(),
        });
    }

    let roles = vocab.roles();
    let parsed: Vec<LocationValue> = location_preds.iter().map(|p| LocationValue::from_prediction(p)).collect();
    let mut loc = parsed.clone();
    let mut rule: Vec<Option<RepairRule>> = vec![None; steps + 1];

    if let Some(&first) = states.first() {
        let absent_before =
            roles.create == Some(first) || (!roles.is_empty() && vocab.is_nonexistent(first));
        if absent_before {
            loc[0] = LocationValue::Nonexistent;
            rule[0] = Some(RepairRule::SlotZero);
        }
    }

    for t in 1..=steps {
        let s = states[t - 1];
        if vocab.is_nonexistent(s) || roles.destroy == Some(s) {
            loc[t] = LocationValue::Nonexistent;
            rule[t] = Some(RepairRule::Gone);
        } else if roles.create == Some(s) {
            let mut k = t - 1;
            loop {
                if !loc[k].is_nonexistent() {
                    loc[k] = LocationValue::Nonexistent;
                    rule[k] = Some(RepairRule::Create);
                }
                if k >= 1 && roles.exist == Some(states[k - 1]) {
                    k -= 1;
                } else {
                    break;
                }
            }
            if parsed[t].is_nonexistent() {
                loc[t] = LocationValue::Unknown;
                rule[t] = Some(RepairRule::Create);
            }
        } else if roles.exist == Some(s) {
            loc[t] = loc[t - 1].clone();
            rule[t] = Some(RepairRule::Exist);
        } else if roles.move_ == Some(s) && (parsed[t].is_nonexistent() || parsed[t].same_as(&loc[t - 1])) {
            loc[t] = LocationValue::Unknown;
            rule[t] = Some(RepairRule::Move);
        }
    }

    let repairs = (0..=steps)
        .filter(|&k| !loc[k].same_as(&parsed[k]))
        .map(|k| Repair {
            slot: k,
            original: parsed[k].clone(),
            repaired: loc[k].clone(),
            rule: rule[k].expect("changed slots always have a rule"),
        })
        .collect();
    Ok(ResolvedTrack {
        states: states.to_vec(),
        locations: loc,
        repairs,
    })
}
