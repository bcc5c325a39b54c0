use serde::{Deserialize, Serialize};

/// Rolling summary of the learner's progress and preferences.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LearningProfile {
    pub text: String,
    pub version: u32,
    pub updated_at_round: u32,
}

impl LearningProfile {
    pub fn is_empty(&self) -> bool {
        self.version == 0
    }

    /// The profile that replaces this one after an update at `round`.
    pub fn next(&self, text: impl Into<String>, round: u32) -> Self {
        Self {
            text: text.into().trim().to_string(),
            version: self.version + 1,
            updated_at_round: round,
        }
    }
}
