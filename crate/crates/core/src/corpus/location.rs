use std::fmt;

/// Grid encoding of an unknown location.
pub const UNKNOWN: &str = "?";
/// Grid encoding of a nonexistent entity.
pub const NONEXISTENT: &str = "-";

/// Location of an entity at one slot of a grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocationValue {
    Span(String),
    Unknown,
    Nonexistent,
}

/// Normalized comparison key: spans compare after [`normalize`], and `?`
/// only ever matches `?`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocationKey {
    Span(String),
    Unknown,
    Nonexistent,
}

impl LocationValue {
    pub fn span(text: impl Into<String>) -> Self {
        LocationValue::Span(text.into())
    }

    /// Parses the grid encoding (`-`, `?`, or verbatim span text).
    pub fn from_grid(s: &str) -> Self {
        match s.trim() {
            NONEXISTENT => LocationValue::Nonexistent,
            UNKNOWN | "" => LocationValue::Unknown,
            _ => LocationValue::Span(s.to_string()),
        }
    }

    /// Parses a raw model answer: `none` and `unknown` are reserved, anything
    /// else is a span. An empty answer carries no span and reads as unknown.
    pub fn from_prediction(s: &str) -> Self {
        let t = s.trim();
        if t.eq_ignore_ascii_case("none") {
            LocationValue::Nonexistent
        } else if t.eq_ignore_ascii_case("unknown") || t.is_empty() {
            LocationValue::Unknown
        } else {
            LocationValue::Span(s.to_string())
        }
    }

    /// Grid encoding.
    pub fn as_grid_str(&self) -> &str {
        match self {
            LocationValue::Span(s) => s,
            LocationValue::Unknown => UNKNOWN,
            LocationValue::Nonexistent => NONEXISTENT,
        }
    }

    /// Answer string of the extractive-QA location format.
    pub fn as_answer_str(&self) -> &str {
        match self {
            LocationValue::Span(s) => s,
            LocationValue::Unknown => "unknown",
            LocationValue::Nonexistent => "none",
        }
    }

    pub fn is_nonexistent(&self) -> bool {
        matches!(self, LocationValue::Nonexistent)
    }

    pub fn key(&self) -> LocationKey {
        match self {
            LocationValue::Span(s) => LocationKey::Span(normalize(s)),
            LocationValue::Unknown => LocationKey::Unknown,
            LocationValue::Nonexistent => LocationKey::Nonexistent,
        }
    }

    /// Equality under normalization.
    pub fn same_as(&self, other: &LocationValue) -> bool {
        self.key() == other.key()
    }
}

impl fmt::Display for LocationValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_grid_str())
    }
}

/// Lowercases, collapses whitespace runs and strips surrounding punctuation.
pub fn normalize(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encodings() {
        assert_eq!(LocationValue::from_grid("-"), LocationValue::Nonexistent);
        assert_eq!(LocationValue::from_grid("?"), LocationValue::Unknown);
        assert_eq!(LocationValue::from_grid("the dam"), LocationValue::span("the dam"));
        assert_eq!(LocationValue::span("x").as_grid_str(), "x");
        assert_eq!(LocationValue::Unknown.as_grid_str(), "?");
        assert_eq!(LocationValue::Nonexistent.as_grid_str(), "-");

        assert_eq!(LocationValue::from_prediction("none"), LocationValue::Nonexistent);
        assert_eq!(LocationValue::from_prediction(" Unknown "), LocationValue::Unknown);
        assert_eq!(LocationValue::from_prediction("dam"), LocationValue::span("dam"));
        assert_eq!(LocationValue::Nonexistent.as_answer_str(), "none");
        assert_eq!(LocationValue::Unknown.as_answer_str(), "unknown");
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("  The   Power\tPlant. "), "the power plant");
        assert_eq!(normalize("\"soil\""), "soil");
        assert_eq!(normalize("(. a .)"), "a");
        assert!(LocationValue::span("Soil.").same_as(&LocationValue::span("soil")));
        assert!(!LocationValue::Unknown.same_as(&LocationValue::span("?x")));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "[ a-zA-Z.,;!?()\"'\t-]{0,24}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }
    }
}
