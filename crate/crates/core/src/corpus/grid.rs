use std::collections::BTreeMap;
use std::fmt;

use super::location::LocationValue;
use super::vocab::StateVocabulary;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub aliases: Vec<String>,
}

impl Entity {
    /// Splits a raw entity field such as `"water; liquid"` into aliases. The
    /// raw string itself is the entity id.
    pub fn from_raw(id: &str, raw_name: &str) -> Result<Self> {
        let aliases: Vec<String> = raw_name.split(';').map(|a| a.trim().to_string()).collect();
        if aliases.iter().any(|a| a.is_empty()) {
            return Err(Error::Validation(format!("entity {id:?} has an empty alias in {raw_name:?}")));
        }
        Ok(Self {
            id: id.to_string(),
            aliases,
        })
    }

    pub fn first_alias(&self) -> &str {
        &self.aliases[0]
    }

    /// The raw field the aliases were split from.
    pub fn raw_name(&self) -> String {
        self.aliases.join("; ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Procedure {
    pub id: String,
    pub steps: Vec<String>,
    pub entities: Vec<Entity>,
}

impl Procedure {
    pub fn new(id: &str, steps: Vec<String>, entities: Vec<Entity>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Validation(format!("procedure {id} has no steps")));
        }
        if let Some(i) = steps.iter().position(|s| s.trim().is_empty()) {
            return Err(Error::Validation(format!("procedure {id}: step {} is empty", i + 1)));
        }
        for (i, e) in entities.iter().enumerate() {
            if entities[..i].iter().any(|o| o.id == e.id) {
                return Err(Error::Validation(format!("procedure {id}: duplicate entity id {:?}", e.id)));
            }
        }
        Ok(Self {
            id: id.to_string(),
            steps,
            entities,
        })
    }

    /// Number of steps `T`.
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }
}

/// State and location sequence of one entity: `states` has one label index
/// per step (1..T), `locations` one value per slot (0..T).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pub states: Vec<usize>,
    pub locations: Vec<LocationValue>,
}

impl Track {
    pub fn num_steps(&self) -> usize {
        self.states.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotationGrid {
    pub procedure_id: String,
    pub entries: BTreeMap<String, Track>,
}

impl AnnotationGrid {
    pub fn new(procedure_id: &str) -> Self {
        Self {
            procedure_id: procedure_id.to_string(),
            entries: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConsistencyRule {
    /// Nonexistent or destroyed entities have no location after the step.
    GoneAfterStep,
    /// A created entity did not exist before the step.
    CreateFromNothing,
    /// A created entity exists after the step.
    CreateToSomething,
    /// An entity that merely exists keeps its location.
    ExistStays,
    /// A moved entity exists after the step.
    MoveToSomething,
}

impl fmt::Display for ConsistencyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConsistencyRule::GoneAfterStep => "destroyed/nonexistent => location after is '-'",
            ConsistencyRule::CreateFromNothing => "create => location before is '-'",
            ConsistencyRule::CreateToSomething => "create => location after is not '-'",
            ConsistencyRule::ExistStays => "exist => location after equals location before",
            ConsistencyRule::MoveToSomething => "move => location after is not '-'",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Step index `t` (1-based) whose state triggered the rule.
    pub step: usize,
    pub rule: ConsistencyRule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.rule)
    }
}

/// Checks the state/location consistency rules of a track. Lengths must
/// already agree (`locations.len() == states.len() + 1`).
pub fn check_track(track: &Track, vocab: &StateVocabulary) -> Vec<Violation> {
    let roles = vocab.roles();
    let mut out = Vec::new();
    for (i, &state) in track.states.iter().enumerate() {
        let t = i + 1;
        let before = &track.locations[t - 1];
        let after = &track.locations[t];
        let mut flag = |rule| out.push(Violation { step: t, rule });
        if (vocab.is_nonexistent(state) || roles.destroy == Some(state)) && !after.is_nonexistent() {
            flag(ConsistencyRule::GoneAfterStep);
        }
        if roles.create == Some(state) {
            if !before.is_nonexistent() {
                flag(ConsistencyRule::CreateFromNothing);
            }
            if after.is_nonexistent() {
                flag(ConsistencyRule::CreateToSomething);
            }
        }
        if roles.exist == Some(state) && !after.same_as(before) {
            flag(ConsistencyRule::ExistStays);
        }
        if roles.move_ == Some(state) && after.is_nonexistent() {
            flag(ConsistencyRule::MoveToSomething);
        }
    }
    out
}

/// Checks that a track fits a procedure with `steps` steps.
pub(crate) fn check_shape(track: &Track, steps: usize, vocab: &StateVocabulary) -> Result<()> {
    if track.states.len() != steps {
        return Err(Error::Validation(format!(
            "states has length {} but the procedure has {steps} steps",
            track.states.len()
        )));
    }
    if track.locations.len() != steps + 1 {
        return Err(Error::Validation(format!(
            "locations has length {} but {} slots are required",
            track.locations.len(),
            steps + 1
        )));
    }
    if let Some(&bad) = track.states.iter().find(|&&s| s >= vocab.len()) {
        return Err(Error::Validation(format!("state index {bad} out of range")));
    }
    Ok(())
}
