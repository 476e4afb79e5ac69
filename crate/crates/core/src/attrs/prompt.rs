//! Prompt templates: `${class}` placeholders with optional groups.
//!
//! Grammar:
//!
//! ```text
//! template  := segment*
//! segment   := literal | "${" name "}" | "[" segment* "]"
//! ```
//!
//! A `[ ... ]` group renders only when every placeholder *directly* inside
//! it has a selection; otherwise the whole group is elided. That is how
//! optional attributes disappear together with their joiner text
//! ("…person[ with ${hair_color} hair]"). Nested groups elide independently,
//! so "[ A ${a}[ B ${b}]]" keeps the `A` clause when only `a` is selected.
//! A bare placeholder without a selection renders as nothing. `\$`, `\[`,
//! `\]` and `\\` escape the respective literal characters.
//!
//! Rendered output is whitespace-normalized: runs of whitespace collapse to
//! one space and the ends are trimmed, so elided groups can't leave double
//! spaces behind.
//!
//! Each class may appear at most once in a template — that guarantees a
//! selected attribute appears in the output exactly once.

use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::error::{Error, Result};

use super::{AttributeConfig, IdentityProfile};

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Literal(String),
    Placeholder(String),
    Group(Vec<Segment>),
}

/// A parsed prompt template, reusable across profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    segments: Vec<Segment>,
}

impl PromptTemplate {
    /// Parse template text; rejects malformed syntax and duplicate
    /// placeholders.
    pub fn parse(text: &str) -> Result<PromptTemplate> {
        let mut chars = text.chars().peekable();
        let segments = parse_segments(&mut chars, false)?;
        if chars.next().is_some() {
            return Err(Error::BadTemplate("unmatched ']'".into()));
        }
        let template = PromptTemplate { segments };
        let mut seen = BTreeSet::new();
        for name in template.placeholder_list() {
            if !seen.insert(name.clone()) {
                return Err(Error::BadTemplate(format!(
                    "placeholder ${{{name}}} appears more than once"
                )));
            }
        }
        Ok(template)
    }

    /// All placeholder names, in template order.
    fn placeholder_list(&self) -> Vec<String> {
        fn walk(segments: &[Segment], out: &mut Vec<String>) {
            for segment in segments {
                match segment {
                    Segment::Literal(_) => {}
                    Segment::Placeholder(name) => out.push(name.clone()),
                    Segment::Group(inner) => walk(inner, out),
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.segments, &mut out);
        out
    }

    /// Unique placeholder names.
    pub fn placeholders(&self) -> BTreeSet<String> {
        self.placeholder_list().into_iter().collect()
    }

    /// Verify every placeholder names a class of `config`; the error lists
    /// all offenders.
    pub fn check_classes(&self, config: &AttributeConfig) -> Result<()> {
        let unknown: Vec<String> = self
            .placeholders()
            .into_iter()
            .filter(|name| config.class(name).is_none())
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::UnknownPlaceholder(unknown.join(", ")))
        }
    }

    /// Substitute `selections` into the template.
    pub fn render(&self, selections: &IndexMap<String, String>) -> String {
        let mut out = String::new();
        render_segments(&self.segments, selections, &mut out);
        normalize_whitespace(&out)
    }

    /// Build the fallback template for a config: a constant preamble, then
    /// one optional clause per class in config order.
    pub fn default_for(config: &AttributeConfig) -> PromptTemplate {
        let mut text = String::from(
            "A front-facing document portrait photograph of a person.",
        );
        for class in &config.classes {
            let display = class.name.replace('_', " ");
            text.push_str(&format!(" [{display}: ${{{}}}.]", class.name));
        }
        text.push_str(" Neutral expression, direct gaze, plain light background.");
        PromptTemplate::parse(&text).expect("generated template is well-formed")
    }
}

fn parse_segments(
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
    in_group: bool,
) -> Result<Vec<Segment>> {
    let mut segments = Vec::new();
    let mut literal = String::new();
    loop {
        match chars.peek().copied() {
            None => {
                if in_group {
                    return Err(Error::BadTemplate("unclosed '['".into()));
                }
                break;
            }
            Some(']') => {
                if in_group {
                    chars.next();
                }
                // At top level, leave ']' for the caller to report.
                break;
            }
            Some('[') => {
                chars.next();
                flush_literal(&mut literal, &mut segments);
                segments.push(Segment::Group(parse_segments(chars, true)?));
            }
            Some('\\') => {
                chars.next();
                match chars.next() {
                    Some(c @ ('$' | '[' | ']' | '\\')) => literal.push(c),
                    Some(c) => {
                        return Err(Error::BadTemplate(format!(
                            "unknown escape '\\{c}' (escapable: $ [ ] \\)"
                        )))
                    }
                    None => {
                        return Err(Error::BadTemplate("dangling '\\' at end".into()))
                    }
                }
            }
            Some('$') => {
                chars.next();
                if chars.peek() != Some(&'{') {
                    // A lone '$' is literal text.
                    literal.push('$');
                    continue;
                }
                chars.next();
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(c) if c.is_ascii_alphanumeric() || c == '_' => name.push(c),
                        Some(c) => {
                            return Err(Error::BadTemplate(format!(
                                "invalid character {c:?} in placeholder name"
                            )))
                        }
                        None => {
                            return Err(Error::BadTemplate("unclosed '${'".into()))
                        }
                    }
                }
                if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(Error::BadTemplate(format!(
                        "invalid placeholder name {name:?}"
                    )));
                }
                flush_literal(&mut literal, &mut segments);
                segments.push(Segment::Placeholder(name));
            }
            Some(c) => {
                chars.next();
                literal.push(c);
            }
        }
    }
    flush_literal(&mut literal, &mut segments);
    Ok(segments)
}

fn flush_literal(literal: &mut String, segments: &mut Vec<Segment>) {
    if !literal.is_empty() {
        segments.push(Segment::Literal(std::mem::take(literal)));
    }
}

fn all_selected(segments: &[Segment], selections: &IndexMap<String, String>) -> bool {
    segments.iter().all(|segment| match segment {
        Segment::Literal(_) => true,
        Segment::Placeholder(name) => selections.contains_key(name),
        // Nested groups decide their own elision; they never veto the parent.
        Segment::Group(_) => true,
    })
}

fn render_segments(
    segments: &[Segment],
    selections: &IndexMap<String, String>,
    out: &mut String,
) {
    for segment in segments {
        match segment {
            Segment::Literal(text) => out.push_str(text),
            Segment::Placeholder(name) => {
                if let Some(value) = selections.get(name) {
                    out.push_str(value);
                }
            }
            Segment::Group(inner) => {
                if all_selected(inner, selections) {
                    render_segments(inner, selections, out);
                }
            }
        }
    }
}

fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// Parse `template`, check it against `config`, and render the profile's
/// selections into it.
pub fn assemble_prompt(
    profile: &IdentityProfile,
    template: &str,
    config: &AttributeConfig,
) -> Result<String> {
    let parsed = PromptTemplate::parse(template)?;
    parsed.check_classes(config)?;
    Ok(parsed.render(&profile.selections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrs::{AttributeClass, AttributeValue};

    fn selections(pairs: &[(&str, &str)]) -> IndexMap<String, String> {
        pairs
            .iter()
            .map(|&(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn profile(pairs: &[(&str, &str)]) -> IdentityProfile {
        IdentityProfile {
            id: "000000".into(),
            generation_index: 0,
            seed: 0,
            selections: selections(pairs),
            unsatisfiable: vec![],
            prompt: String::new(),
        }
    }

    fn config_with(names: &[&str]) -> AttributeConfig {
        AttributeConfig {
            description: None,
            classes: names
                .iter()
                .map(|&name| AttributeClass {
                    name: name.into(),
                    inclusion_probability: 1.0,
                    attributes: vec![AttributeValue { label: "x".into(), weight: 1.0 }],
                })
                .collect(),
            clash_rules: vec![],
        }
    }

    #[test]
    fn direct_substitution() {
        let out = assemble_prompt(
            &profile(&[("gender", "Female"), ("age", "30s")]),
            "a ${gender} in her ${age}",
            &config_with(&["gender", "age"]),
        )
        .unwrap();
        assert_eq!(out, "a Female in her 30s");
    }

    #[test]
    fn constant_template_survives_empty_selections() {
        let out = assemble_prompt(
            &profile(&[]),
            "studio portrait[ with ${eyewear}][ and ${headwear}]",
            &config_with(&["eyewear", "headwear"]),
        )
        .unwrap();
        assert_eq!(out, "studio portrait");
    }

    #[test]
    fn groups_elide_as_a_unit() {
        let template = "a person[ with ${hair_color} hair] here";
        let config = config_with(&["hair_color"]);
        let with = assemble_prompt(&profile(&[("hair_color", "black")]), template, &config)
            .unwrap();
        assert_eq!(with, "a person with black hair here");
        let without = assemble_prompt(&profile(&[]), template, &config).unwrap();
        assert_eq!(without, "a person here");
    }

    #[test]
    fn nested_group_requires_all_inner_selections() {
        let template = "x[ A ${a}[ B ${b}]]";
        let config = config_with(&["a", "b"]);
        assert_eq!(
            assemble_prompt(&profile(&[("a", "1"), ("b", "2")]), template, &config).unwrap(),
            "x A 1 B 2"
        );
        assert_eq!(
            assemble_prompt(&profile(&[("a", "1")]), template, &config).unwrap(),
            "x A 1"
        );
        assert_eq!(
            assemble_prompt(&profile(&[("b", "2")]), template, &config).unwrap(),
            "x"
        );
    }

    #[test]
    fn bare_unselected_placeholder_collapses_cleanly() {
        let out = assemble_prompt(
            &profile(&[("b", "tall")]),
            "a ${a} ${b} person",
            &config_with(&["a", "b"]),
        )
        .unwrap();
        assert_eq!(out, "a tall person");
    }

    #[test]
    fn unknown_placeholders_are_listed() {
        let err = assemble_prompt(
            &profile(&[]),
            "${gender} ${zodiac} ${blood_type}",
            &config_with(&["gender"]),
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("blood_type") && err.contains("zodiac"), "{err}");
        assert!(!err.contains("gender"));
    }

    #[test]
    fn escapes_and_literal_dollar() {
        let out = assemble_prompt(
            &profile(&[]),
            r"price \[USD\] is $5 \\ \$x",
            &config_with(&[]),
        )
        .unwrap();
        assert_eq!(out, r"price [USD] is $5 \ $x");
    }

    #[test]
    fn malformed_templates_are_rejected() {
        for bad in ["${unclosed", "${}", "${9lives}", "[no close", "no open]", r"dangling\"] {
            assert!(
                PromptTemplate::parse(bad).is_err(),
                "{bad:?} should not parse"
            );
        }
        let err = PromptTemplate::parse("${a} and ${a}").unwrap_err().to_string();
        assert!(err.contains("more than once"), "{err}");
    }

    #[test]
    fn default_template_covers_every_class_once() {
        let config = config_with(&["gender", "age", "hair_color"]);
        let template = PromptTemplate::default_for(&config);
        assert_eq!(
            template.placeholders().into_iter().collect::<Vec<_>>(),
            vec!["age".to_string(), "gender".into(), "hair_color".into()]
        );
        let out = template.render(&selections(&[("gender", "Female"), ("age", "30s")]));
        assert!(out.contains("gender: Female."));
        assert!(out.contains("age: 30s."));
        assert!(!out.contains("hair color:"), "unselected class must elide: {out}");
    }
}
