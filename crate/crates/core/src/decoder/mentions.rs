use crate::corpus::{Entity, Procedure};

/// Lowercase alphanumeric tokens of `text`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// True iff some alias occurs as a contiguous token run of `step`.
pub fn is_mentioned(entity: &Entity, step: &str) -> bool {
    let tokens = tokenize(step);
    entity.aliases.iter().any(|a| contains_run(&tokens, &tokenize(a)))
}

/// One flag per step: the entity is explicitly mentioned in that step.
pub fn detect_mentions(procedure: &Procedure, entity: &Entity) -> Vec<bool> {
    procedure.steps.iter().map(|s| is_mentioned(entity, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entity(raw: &str) -> Entity {
        Entity::from_raw(raw, raw).unwrap()
    }

    #[test]
    fn hydropower_steps() {
        let water = entity("water");
        assert!(is_mentioned(&water, "Water flows downwards thanks to gravity."));
        assert!(!is_mentioned(&water, "Enters the dam at high pressure."));
    }

    #[test]
    fn alias_disjunction() {
        assert!(is_mentioned(&entity("H2O; water"), "the water boils"));
        assert!(!is_mentioned(&entity("H2O; water"), "the waterfall"));
    }

    #[test]
    fn multi_token_alias() {
        let e = entity("carbon dioxide");
        assert!(is_mentioned(&e, "Plants absorb carbon-dioxide."));
        assert!(!is_mentioned(&e, "Carbon is stored as dioxide."));
    }

    #[test]
    fn punctuation_only_alias_never_matches() {
        assert!(!is_mentioned(&entity("--"), "-- anything --"));
    }

    proptest! {
        #[test]
        fn invariant_to_case_and_punctuation(
            words in prop::collection::vec("[a-z]{1,6}", 1..8),
            pick in 0usize..8,
            punct in prop::collection::vec("[.,;:!?()\"]{0,2}", 8),
            upper in prop::collection::vec(any::<bool>(), 8),
        ) {
            let target = words[pick % words.len()].clone();
            let e = entity(&target);
            let plain = words.join(" ");
            let noisy: Vec<String> = words
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let w = if upper[i] { w.to_uppercase() } else { w.clone() };
                    format!("{}{}{}", punct[i], w, punct[(i + 1) % 8])
                })
                .collect();
            prop_assert!(is_mentioned(&e, &plain));
            prop_assert!(is_mentioned(&e, &noisy.join(" ")));
        }
    }
}
