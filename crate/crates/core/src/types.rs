//! Small domain newtypes shared by every layer of the engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bloom-taxonomy difficulty level, 1 (remembering) through 5 (evaluating).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Difficulty(u8);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("difficulty must be between 1 and 5, got {0}")]
pub struct InvalidDifficulty(pub i64);

impl Difficulty {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn new(level: i64) -> Result<Self, InvalidDifficulty> {
        if (Self::MIN as i64..=Self::MAX as i64).contains(&level) {
            Ok(Self(level as u8))
        } else {
            Err(InvalidDifficulty(level))
        }
    }

    pub fn level(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Difficulty> {
        (Self::MIN..=Self::MAX).map(Difficulty)
    }
}

impl TryFrom<u8> for Difficulty {
    type Error = InvalidDifficulty;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value as i64)
    }
}

impl From<Difficulty> for u8 {
    fn from(d: Difficulty) -> u8 {
        d.0
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which processes are active in a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Interaction, reflection and reaction.
    Main,
    /// Reflection removed; reaction runs on a fixed schedule.
    NoReflection,
    /// Only interaction over short-term history and the initial plan.
    InteractionOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [
        Variant::Main,
        Variant::NoReflection,
        Variant::InteractionOnly,
    ];

    /// Number of rounds kept in short-term history.
    pub fn short_term_capacity(self) -> usize {
        match self {
            Variant::NoReflection => 10,
            Variant::Main | Variant::InteractionOnly => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Main => "main",
            Variant::NoReflection => "no_reflection",
            Variant::InteractionOnly => "interaction_only",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown variant {0:?} (expected main, no_reflection or interaction_only)")]
pub struct UnknownVariant(pub String);

impl FromStr for Variant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "main" => Ok(Variant::Main),
            "no_reflection" => Ok(Variant::NoReflection),
            "interaction_only" => Ok(Variant::InteractionOnly),
            other => Err(UnknownVariant(other.to_string())),
        }
    }
}

/// Identifies a prompted tool (or the meta agent) for logging, decoding
/// defaults and scripted-provider queues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolTag {
    MetaAgent,
    Teach,
    Answer,
    Quiz,
    Evaluation,
    ProfileGeneration,
    ObjectiveCompletion,
    CourseDesign,
    QuizGeneration,
    FinalQuiz,
}

impl ToolTag {
    pub const ALL: [ToolTag; 10] = [
        ToolTag::MetaAgent,
        ToolTag::Teach,
        ToolTag::Answer,
        ToolTag::Quiz,
        ToolTag::Evaluation,
        ToolTag::ProfileGeneration,
        ToolTag::ObjectiveCompletion,
        ToolTag::CourseDesign,
        ToolTag::QuizGeneration,
        ToolTag::FinalQuiz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolTag::MetaAgent => "meta_agent",
            ToolTag::Teach => "teach",
            ToolTag::Answer => "answer",
            ToolTag::Quiz => "quiz",
            ToolTag::Evaluation => "evaluation",
            ToolTag::ProfileGeneration => "profile_generation",
            ToolTag::ObjectiveCompletion => "objective_completion",
            ToolTag::CourseDesign => "course_design",
            ToolTag::QuizGeneration => "quiz_generation",
            ToolTag::FinalQuiz => "final_quiz",
        }
    }

    /// Learner-facing tools. These default to a non-zero temperature.
    pub fn is_interaction(self) -> bool {
        matches!(
            self,
            ToolTag::Teach | ToolTag::Answer | ToolTag::Quiz | ToolTag::Evaluation
        )
    }
}

impl fmt::Display for ToolTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ToolTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown tool tag {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difficulty_range() {
        assert!(Difficulty::new(0).is_err());
        assert!(Difficulty::new(6).is_err());
        assert_eq!(Difficulty::new(3).unwrap().level(), 3);
        assert_eq!(Difficulty::all().count(), 5);
        assert!(serde_json::from_str::<Difficulty>("9").is_err());
    }

    #[test]
    fn capacity_by_variant() {
        assert_eq!(Variant::Main.short_term_capacity(), 5);
        assert_eq!(Variant::InteractionOnly.short_term_capacity(), 5);
        assert_eq!(Variant::NoReflection.short_term_capacity(), 10);
    }

    #[test]
    fn tool_tag_round_trips_through_str() {
        for tag in ToolTag::ALL {
            assert_eq!(tag.as_str().parse::<ToolTag>().unwrap(), tag);
            let json = serde_json::to_string(&tag).unwrap();
            assert_eq!(json, format!("\"{}\"", tag.as_str()));
        }
    }
}
