use std::collections::{BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("valid regex"));

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template:?} is missing a binding for slot {slot:?}")]
    MissingSlot { template: String, slot: String },
    #[error("template {0:?} is already registered")]
    Duplicate(String),
}

/// A prompt body with `{name}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: String,
    body: String,
    required_slots: BTreeSet<String>,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Self {
        let body = body.into();
        let required_slots = PLACEHOLDER
            .captures_iter(&body)
            .map(|c| c[1].to_string())
            .collect();
        Self {
            id: id.into(),
            body,
            required_slots,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn required_slots(&self) -> &BTreeSet<String> {
        &self.required_slots
    }

    /// Substitutes every placeholder. Bindings for unknown slots are ignored.
    pub fn render(&self, bindings: &HashMap<&str, String>) -> Result<String, TemplateError> {
        if let Some(slot) = self
            .required_slots
            .iter()
            .find(|s| !bindings.contains_key(s.as_str()))
        {
            return Err(TemplateError::MissingSlot {
                template: self.id.clone(),
                slot: slot.clone(),
            });
        }
        // Single pass: text inserted from a binding is never re-scanned.
        Ok(PLACEHOLDER
            .replace_all(&self.body, |c: &regex::Captures<'_>| {
                bindings[&c[1]].clone()
            })
            .into_owned())
    }
}

/// Immutable-after-registration map from template id to body.
#[derive(Debug, Clone, Default)]
pub struct TemplateRegistry {
    templates: HashMap<String, PromptTemplate>,
}

impl TemplateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, template: PromptTemplate) -> Result<(), TemplateError> {
        if self.templates.contains_key(template.id()) {
            return Err(TemplateError::Duplicate(template.id().to_string()));
        }
        self.templates.insert(template.id().to_string(), template);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PromptTemplate> {
        self.templates.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn render(
        &self,
        id: &str,
        bindings: &HashMap<&str, String>,
    ) -> Result<String, TemplateError> {
        self.get(id)
            .ok_or_else(|| TemplateError::UnknownTemplate(id.to_string()))?
            .render(bindings)
    }
}

/// True if `text` still contains a `{slot}` style marker.
pub fn has_placeholder(text: &str) -> bool {
    PLACEHOLDER.is_match(text)
}
