//! Attribute configuration: weighted classes, inclusion probabilities, and
//! clash rules — plus sampling and prompt assembly built on top.
//!
//! A config is an *ordered* list of attribute classes. Each class has an
//! inclusion probability (how often a sampled identity gets any value for it)
//! and weighted attribute labels (how the value is chosen when it does).
//! Clash rules are directional: once a trigger attribute is selected, its
//! excluded classes/attributes are unavailable *to later classes in config
//! order*. A rule pointing backwards (at a class sampled before its trigger)
//! can never fire; validation flags it as a warning rather than rewriting
//! history at sampling time.
//!
//! Validation findings carry a severity: `Error` findings are exactly the
//! config-invariant violations (sampling refuses to run with any present),
//! `Warning` findings are suspicious-but-legal constructs like backward
//! rules.

mod prompt;
mod sampler;

pub use prompt::{assemble_prompt, PromptTemplate};
pub use sampler::{read_profiles_jsonl, sample_profiles, write_profiles_jsonl, IdentityProfile};

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One weighted attribute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeValue {
    pub label: String,
    pub weight: f64,
}

/// A named attribute class with an inclusion probability and weighted values.
///
/// Weights are relative — they are normalized at draw time and need not sum
/// to 1, so percent-style configs (49/49/2) work as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeClass {
    pub name: String,
    pub inclusion_probability: f64,
    pub attributes: Vec<AttributeValue>,
}

/// What a clash rule makes unavailable: a whole class, or one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionTarget {
    pub class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
}

impl fmt::Display for ExclusionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.attribute {
            Some(attr) => write!(f, "{}.{attr}", self.class),
            None => f.write_str(&self.class),
        }
    }
}

/// The trigger side of a clash rule: one concrete (class, attribute) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClashTrigger {
    pub class: String,
    pub attribute: String,
}

/// When `trigger` is selected, everything in `excluded` becomes unavailable
/// for classes sampled after the trigger's class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClashRule {
    pub trigger: ClashTrigger,
    pub excluded: Vec<ExclusionTarget>,
}

/// The full attribute configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub classes: Vec<AttributeClass>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clash_rules: Vec<ClashRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// One validation finding, naming what it is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    /// The offending class name or rule (`clash_rules[i]`).
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.severity, self.subject, self.message)
    }
}

/// True if any finding is an error (invariant violation).
pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

fn is_identifier(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit())
}

impl AttributeConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn class(&self, name: &str) -> Option<&AttributeClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }
}

/// Check every config invariant; errors are violations, warnings are
/// rules that can never fire (backward or same-class targets).
pub fn validate_config(config: &AttributeConfig) -> Vec<Finding> {
    let mut findings = Vec::new();
    let error = |subject: &str, message: String| Finding {
        severity: Severity::Error,
        subject: subject.to_string(),
        message,
    };
    let warning = |subject: &str, message: String| Finding {
        severity: Severity::Warning,
        subject: subject.to_string(),
        message,
    };

    let mut class_names: HashSet<&str> = HashSet::new();
    for class in &config.classes {
        if !is_identifier(&class.name) {
            findings.push(error(
                &class.name,
                format!(
                    "class name {:?} is not an identifier ([A-Za-z_][A-Za-z0-9_]*)",
                    class.name
                ),
            ));
        }
        if !class_names.insert(&class.name) {
            findings.push(error(
                &class.name,
                format!("duplicate class name {:?}", class.name),
            ));
        }
        if !(0.0..=1.0).contains(&class.inclusion_probability) {
            findings.push(error(
                &class.name,
                format!(
                    "inclusion probability {} out of range [0, 1]",
                    class.inclusion_probability
                ),
            ));
        }
        if class.attributes.is_empty() {
            findings.push(error(&class.name, "class has no attributes".into()));
        }
        let mut labels: HashSet<&str> = HashSet::new();
        for attr in &class.attributes {
            if attr.label.is_empty() || attr.label.chars().any(char::is_control) {
                findings.push(error(
                    &class.name,
                    format!("attribute label {:?} is empty or has control characters", attr.label),
                ));
            }
            if !labels.insert(&attr.label) {
                findings.push(error(
                    &class.name,
                    format!("duplicate attribute label {:?}", attr.label),
                ));
            }
            if !(attr.weight > 0.0 && attr.weight.is_finite()) {
                findings.push(error(
                    &class.name,
                    format!("attribute {:?} weight {} is not positive", attr.label, attr.weight),
                ));
            }
        }
    }

    for (i, rule) in config.clash_rules.iter().enumerate() {
        let subject = format!("clash_rules[{i}]");
        let trigger_index = match config.class_index(&rule.trigger.class) {
            Some(idx) => {
                let class = &config.classes[idx];
                if !class.attributes.iter().any(|a| a.label == rule.trigger.attribute) {
                    findings.push(error(
                        &subject,
                        format!(
                            "unknown reference: trigger attribute {:?} is not in class {:?}",
                            rule.trigger.attribute, rule.trigger.class
                        ),
                    ));
                }
                Some(idx)
            }
            None => {
                findings.push(error(
                    &subject,
                    format!("unknown reference: trigger class {:?}", rule.trigger.class),
                ));
                None
            }
        };
        if rule.excluded.is_empty() {
            findings.push(warning(&subject, "rule excludes nothing".into()));
        }
        for target in &rule.excluded {
            let target_index = match config.class_index(&target.class) {
                Some(idx) => idx,
                None => {
                    findings.push(error(
                        &subject,
                        format!("unknown reference: excluded class {:?}", target.class),
                    ));
                    continue;
                }
            };
            if let Some(attr) = &target.attribute {
                if !config.classes[target_index]
                    .attributes
                    .iter()
                    .any(|a| &a.label == attr)
                {
                    findings.push(error(
                        &subject,
                        format!(
                            "unknown reference: excluded attribute {:?} is not in class {:?}",
                            attr, target.class
                        ),
                    ));
                    continue;
                }
            }
            // Trigger contained in its own excluded set: the rule would
            // contradict itself.
            let excludes_trigger = target.class == rule.trigger.class
                && target
                    .attribute
                    .as_ref()
                    .map_or(true, |a| *a == rule.trigger.attribute);
            if excludes_trigger {
                findings.push(error(
                    &subject,
                    format!("rule excludes its own trigger {}.{}", rule.trigger.class, rule.trigger.attribute),
                ));
            } else if let Some(t_idx) = trigger_index {
                // Directional semantics: exclusions only affect classes that
                // come after the trigger's class in config order.
                if target_index <= t_idx {
                    findings.push(warning(
                        &subject,
                        format!(
                            "excluded target {target} is not after trigger class {:?} in config order; the exclusion can never apply",
                            rule.trigger.class
                        ),
                    ));
                }
            }
        }
    }

    findings
}
