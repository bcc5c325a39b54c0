//! The session event log. Every state change is an event, and replaying
//! the log through [`SessionState::apply`](super::SessionState::apply)
//! rebuilds the state exactly.

use serde::{Deserialize, Serialize};

use crate::memory::{CoursePlan, LearningProfile, MemoryRecord, NodeId, QuizItem, RemovedNode};
use crate::tools::{CompletionVerdict, InteractionTool, SystemResponse};
use crate::types::{Difficulty, ToolTag, Variant};

/// Actor for events the engine itself produces.
pub const ENGINE: &str = "engine";
/// Actor for history bookkeeping.
pub const MEMORY: &str = "memory";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub round: u32,
    pub actor: String,
    #[serde(flatten)]
    pub kind: EventKind,
    pub latency_ms: u64,
}

impl Event {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    AllCompleted,
    MaxRounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    SessionStarted {
        session_id: String,
        topic: String,
        difficulty: Difficulty,
        variant: Variant,
        short_term_capacity: usize,
        plan: CoursePlan,
    },
    /// A model call that returned.
    LlmCall {
        template: String,
        prompt: String,
        completion: String,
        attempts: u32,
        temperature: f64,
        max_output_tokens: u32,
        timeout_ms: u64,
    },
    /// A model call that failed.
    LlmFailed {
        template: String,
        prompt: String,
        error: String,
    },
    Routed {
        tool: InteractionTool,
        rationale: String,
    },
    /// A completion that did not follow its format and was read through the
    /// tool's fallback rule.
    ParseFallback {
        reason: String,
    },
    /// An interaction tool failed and the reply fell back to teach.
    Fallback {
        from: ToolTag,
        reason: String,
    },
    Response {
        learner_text: Option<String>,
        response: SystemResponse,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        final_quiz: bool,
    },
    RoundRecorded {
        learner: MemoryRecord,
        system: MemoryRecord,
    },
    Verdict(CompletionVerdict),
    ObjectiveCompleted {
        id: NodeId,
    },
    QuizGenerated {
        objective: NodeId,
        items: Vec<QuizItem>,
    },
    ProfileUpdated {
        profile: LearningProfile,
    },
    PlanUpdated {
        plan: CoursePlan,
        removed: Vec<RemovedNode>,
        dropped_pool_keys: Vec<NodeId>,
    },
    /// A backend tool ran but changed nothing.
    Noop {
        tool: ToolTag,
        reason: String,
    },
    SessionFinished {
        reason: FinishReason,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SessionStarted { .. } => "session_started",
            EventKind::LlmCall { .. } => "llm_call",
            EventKind::LlmFailed { .. } => "llm_failed",
            EventKind::Routed { .. } => "routed",
            EventKind::ParseFallback { .. } => "parse_fallback",
            EventKind::Fallback { .. } => "fallback",
            EventKind::Response { .. } => "response",
            EventKind::RoundRecorded { .. } => "round_recorded",
            EventKind::Verdict(_) => "verdict",
            EventKind::ObjectiveCompleted { .. } => "objective_completed",
            EventKind::QuizGenerated { .. } => "quiz_generated",
            EventKind::ProfileUpdated { .. } => "profile_updated",
            EventKind::PlanUpdated { .. } => "plan_updated",
            EventKind::Noop { .. } => "noop",
            EventKind::SessionFinished { .. } => "session_finished",
        }
    }
}

/// Serializes events as JSON lines.
pub fn to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}

/// Parses JSON lines; blank lines are skipped. Errors carry the 1-based
/// line number.
pub fn from_jsonl(text: &str) -> Result<Vec<Event>, (usize, serde_json::Error)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e)))
        .collect()
}
