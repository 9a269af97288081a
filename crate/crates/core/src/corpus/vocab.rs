use crate::error::{Error, Result};

/// Labels whose consistency rules tie states to location changes.
///
/// A vocabulary without event roles (Recipes) only constrains locations
/// through its nonexistent states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventRoles {
    pub create: Option<usize>,
    pub exist: Option<usize>,
    pub move_: Option<usize>,
    pub destroy: Option<usize>,
}

impl EventRoles {
    pub fn is_empty(&self) -> bool {
        self.create.is_none() && self.exist.is_none() && self.move_.is_none() && self.destroy.is_none()
    }
}

/// Closed set of state labels. Label order is the logit column order
/// everywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVocabulary {
    name: String,
    labels: Vec<String>,
    nonexistent: Vec<bool>,
    choice_order: Vec<usize>,
    roles: EventRoles,
}

impl StateVocabulary {
    pub const PROPARA: &'static str = "propara";
    pub const RECIPES: &'static str = "recipes";

    /// Builds a vocabulary with no event roles and choices in label order.
    pub fn new(name: &str, labels: &[&str], nonexistent: &[&str]) -> Result<Self> {
        if name.trim().is_empty() {
            return Err(Error::Config("vocabulary name is empty".into()));
        }
        if labels.is_empty() {
            return Err(Error::Config(format!("vocabulary {name} has no labels")));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.trim().is_empty() {
                return Err(Error::Config(format!("vocabulary {name}: empty label at {i}")));
            }
            if labels[..i].contains(label) {
                return Err(Error::Config(format!("vocabulary {name}: duplicate label {label}")));
            }
        }
        let mut flags = vec![false; labels.len()];
        for label in nonexistent {
            let idx = labels.iter().position(|l| l == label).ok_or_else(|| {
                Error::Config(format!("vocabulary {name}: nonexistent state {label} is not a label"))
            })?;
            flags[idx] = true;
        }
        Ok(Self {
            name: name.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            nonexistent: flags,
            choice_order: (0..labels.len()).collect(),
            roles: EventRoles::default(),
        })
    }

    /// Assigns create/exist/move/destroy semantics to the named labels.
    pub fn with_event_roles(mut self, create: &str, exist: &str, move_: &str, destroy: &str) -> Result<Self> {
        self.roles = EventRoles {
            create: Some(self.require(create)?),
            exist: Some(self.require(exist)?),
            move_: Some(self.require(move_)?),
            destroy: Some(self.require(destroy)?),
        };
        Ok(self)
    }

    /// Sets the order in which labels are listed as lettered choices.
    pub fn with_choice_order(mut self, order: &[&str]) -> Result<Self> {
        if order.len() != self.labels.len() {
            return Err(Error::Config(format!(
                "choice order for {} must list all {} labels",
                self.name,
                self.labels.len()
            )));
        }
        let mut idx = Vec::with_capacity(order.len());
        for label in order {
            let i = self.require(label)?;
            if idx.contains(&i) {
                return Err(Error::Config(format!("choice order repeats {label}")));
            }
            idx.push(i);
        }
        self.choice_order = idx;
        Ok(self)
    }

    pub fn propara() -> Self {
        Self::new(
            Self::PROPARA,
            &["create", "exist", "move", "destroy", "outside_before", "outside_after"],
            &["outside_before", "outside_after"],
        )
        .and_then(|v| v.with_event_roles("create", "exist", "move", "destroy"))
        .and_then(|v| {
            v.with_choice_order(&["create", "exist", "destroy", "outside_before", "outside_after", "move"])
        })
        .expect("built-in vocabulary is well formed")
    }

    pub fn recipes() -> Self {
        Self::new(Self::RECIPES, &["exist", "absence"], &["absence"]).expect("built-in vocabulary is well formed")
    }

    /// Looks up a built-in vocabulary by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            Self::PROPARA => Ok(Self::propara()),
            Self::RECIPES => Ok(Self::recipes()),
            other => Err(Error::Config(format!("unknown vocabulary {other:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Like [`index_of`](Self::index_of) but fails with `UnknownLabel`.
    pub fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| Error::UnknownLabel {
            label: label.to_string(),
            vocabulary: self.name.clone(),
        })
    }

    pub fn is_nonexistent(&self, idx: usize) -> bool {
        self.nonexistent[idx]
    }

    pub fn nonexistent_labels(&self) -> impl Iterator<Item = &str> {
        self.labels
            .iter()
            .zip(&self.nonexistent)
            .filter(|(_, &n)| n)
            .map(|(l, _)| l.as_str())
    }

    pub fn choice_order(&self) -> &[usize] {
        &self.choice_order
    }

    pub fn roles(&self) -> EventRoles {
        self.roles
    }

    pub fn is_role(&self, idx: usize, role: Option<usize>) -> bool {
        role == Some(idx)
    }
}
