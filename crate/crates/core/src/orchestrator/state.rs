use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::events::{Event, EventKind};
use super::schedule::Schedule;
use crate::memory::{CoursePlan, LearningHistory, LearningProfile, QuizItem, QuizPool, Speaker};
use crate::tools::{ResponseKind, ToolContext};
use crate::types::{Difficulty, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Active,
    Finished,
}

/// One line of the learner-visible transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub round: u32,
    pub speaker: Speaker,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ResponseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quiz_items: Option<Vec<QuizItem>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub final_quiz: bool,
}

/// Everything one session knows. Only [`SessionState::apply`] mutates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub topic: String,
    pub difficulty: Difficulty,
    pub variant: Variant,
    pub plan: CoursePlan,
    pub profile: LearningProfile,
    pub history: LearningHistory,
    pub pool: QuizPool,
    /// Learner rounds completed so far; the opening turn is round 0.
    pub round: u32,
    pub pending_quiz: Option<Vec<QuizItem>>,
    pub phase: Phase,
    /// Round of the latest in-course quiz.
    pub last_quiz_round: Option<u32>,
    pub transcript: Vec<Turn>,
    /// Number of events applied, used to line snapshots up with the log.
    pub events_applied: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event log is empty")]
    Empty,
    #[error("event log must start with session_started, found {0}")]
    MissingStart(&'static str),
    #[error("event {index} ({kind}) cannot be applied: {message}")]
    Apply {
        index: usize,
        kind: &'static str,
        message: String,
    },
}

impl SessionState {
    /// State right after a `session_started` event.
    pub fn from_start(event: &Event) -> Result<Self, ReplayError> {
        let EventKind::SessionStarted {
            session_id,
            topic,
            difficulty,
            variant,
            short_term_capacity,
            plan,
        } = &event.kind
        else {
            return Err(ReplayError::MissingStart(event.name()));
        };
        let bad = |message: String| ReplayError::Apply {
            index: 0,
            kind: event.name(),
            message,
        };
        if *short_term_capacity == 0 {
            return Err(bad("short-term capacity is zero".into()));
        }
        plan.validate().map_err(|e| bad(e.to_string()))?;
        Ok(Self {
            session_id: session_id.clone(),
            topic: topic.clone(),
            difficulty: *difficulty,
            variant: *variant,
            plan: plan.clone(),
            profile: LearningProfile::default(),
            history: LearningHistory::new(*short_term_capacity),
            pool: QuizPool::new(),
            round: 0,
            pending_quiz: None,
            phase: Phase::Active,
            last_quiz_round: None,
            transcript: Vec::new(),
            events_applied: 1,
        })
    }

    /// Rebuilds a state by replaying a whole log.
    pub fn from_events(events: &[Event]) -> Result<Self, ReplayError> {
        let first = events.first().ok_or(ReplayError::Empty)?;
        let mut state = Self::from_start(first)?;
        for e in &events[1..] {
            state.apply(e)?;
        }
        Ok(state)
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::for_difficulty(self.difficulty)
    }

    pub fn tool_context(&self, round: u32) -> ToolContext<'_> {
        ToolContext {
            topic: &self.topic,
            difficulty: self.difficulty,
            variant: self.variant,
            plan: &self.plan,
            profile: &self.profile,
            history: &self.history,
            pool: &self.pool,
            round,
            last_quiz_round: self.last_quiz_round,
        }
    }

    /// Applies one event. Events that only record what happened leave the
    /// state unchanged apart from the applied-event counter.
    pub fn apply(&mut self, event: &Event) -> Result<(), ReplayError> {
        let index = self.events_applied;
        let fail = |message: String| ReplayError::Apply {
            index,
            kind: event.name(),
            message,
        };
        if self.phase == Phase::Finished {
            return Err(fail("session already finished".into()));
        }
        match &event.kind {
            EventKind::SessionStarted { .. } => return Err(fail("second session_started".into())),
            EventKind::Response {
                learner_text,
                response,
                final_quiz,
            } => {
                match learner_text {
                    Some(text) => {
                        if event.round != self.round + 1 {
                            return Err(fail(format!(
                                "reply for round {} after round {}",
                                event.round, self.round
                            )));
                        }
                        self.round = event.round;
                        self.transcript.push(Turn {
                            round: event.round,
                            speaker: Speaker::Learner,
                            text: text.clone(),
                            kind: None,
                            quiz_items: None,
                            final_quiz: false,
                        });
                    }
                    None if event.round != self.round => {
                        return Err(fail(format!(
                            "system turn for round {} during round {}",
                            event.round, self.round
                        )));
                    }
                    None => {}
                }
                self.pending_quiz = if response.kind == ResponseKind::Quiz {
                    if !final_quiz {
                        self.last_quiz_round = Some(event.round);
                    }
                    response.quiz_items.clone()
                } else {
                    None
                };
                self.transcript.push(Turn {
                    round: event.round,
                    speaker: Speaker::System,
                    text: response.text.clone(),
                    kind: Some(response.kind),
                    quiz_items: response.quiz_items.clone(),
                    final_quiz: *final_quiz,
                });
            }
            EventKind::RoundRecorded { learner, system } => {
                if learner.round != event.round || system.round != event.round {
                    return Err(fail("record round differs from event round".into()));
                }
                if learner.speaker != Speaker::Learner || system.speaker != Speaker::System {
                    return Err(fail("records out of speaker order".into()));
                }
                self.history
                    .append_round(
                        event.round,
                        (learner.text.clone(), learner.vector.clone()),
                        (system.text.clone(), system.vector.clone()),
                    )
                    .map_err(|e| fail(e.to_string()))?;
            }
            EventKind::ObjectiveCompleted { id } => {
                self.plan
                    .mark_completed(id)
                    .map_err(|e| fail(e.to_string()))?;
            }
            EventKind::QuizGenerated { objective, items } => {
                self.pool
                    .append(&self.plan, objective, items.clone())
                    .map_err(|e| fail(e.to_string()))?;
            }
            EventKind::ProfileUpdated { profile } => {
                if profile.version != self.profile.version + 1 {
                    return Err(fail(format!(
                        "profile version {} after {}",
                        profile.version, self.profile.version
                    )));
                }
                self.profile = profile.clone();
            }
            EventKind::PlanUpdated {
                plan,
                dropped_pool_keys,
                ..
            } => {
                if plan.revision != self.plan.revision + 1 {
                    return Err(fail(format!(
                        "plan revision {} after {}",
                        plan.revision, self.plan.revision
                    )));
                }
                if plan.difficulty != self.plan.difficulty {
                    return Err(fail("plan difficulty changed".into()));
                }
                plan.validate().map_err(|e| fail(e.to_string()))?;
                self.plan = plan.clone();
                let dropped = self.pool.retain_plan_nodes(&self.plan);
                if &dropped != dropped_pool_keys {
                    return Err(fail("dropped quiz-pool keys differ from the log".into()));
                }
            }
            EventKind::SessionFinished { .. } => self.phase = Phase::Finished,
            EventKind::LlmCall { .. }
            | EventKind::LlmFailed { .. }
            | EventKind::Routed { .. }
            | EventKind::ParseFallback { .. }
            | EventKind::Fallback { .. }
            | EventKind::Verdict(_)
            | EventKind::Noop { .. } => {}
        }
        self.events_applied += 1;
        Ok(())
    }
}
