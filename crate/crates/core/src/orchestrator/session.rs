use std::sync::Arc;

use thiserror::Error;

use super::events::{Event, EventKind, FinishReason, ENGINE, MEMORY};
use super::state::{Phase, ReplayError, SessionState};
use crate::gateway::{Gateway, GatewayError};
use crate::memory::{CoursePlan, MemoryRecord, NodeId, Speaker};
use crate::tools::{InteractionTool, SystemResponse, ToolError, ToolRunner};
use crate::types::{Difficulty, ToolTag, Variant};

/// Text embedded in place of an empty learner message, which has no
/// embedding of its own. The record keeps the original (empty) text.
const EMPTY_MESSAGE_PROXY: &str = "(empty message)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSpec {
    pub session_id: String,
    pub topic: String,
    pub difficulty: Difficulty,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("the session has finished")]
    SessionFinished,
    #[error("invalid request: {0}")]
    Invalid(String),
    /// The model could not produce a usable reply; nothing was recorded
    /// and the message may be sent again.
    #[error("the tutor is unavailable, try again: {0}")]
    Retriable(ToolError),
    /// Session creation failed in course design or the opening turn.
    #[error("could not start the session: {0}")]
    Upstream(ToolError),
    /// The scripted provider ran dry: the script and the engine disagree.
    #[error(transparent)]
    Script(GatewayError),
    #[error("internal state error: {0}")]
    Internal(#[from] ReplayError),
}

impl EngineError {
    fn from_tool(e: ToolError, wrap: fn(ToolError) -> EngineError) -> Self {
        match e {
            ToolError::Gateway(g) if g.is_fatal() => EngineError::Script(g),
            other => wrap(other),
        }
    }
}

/// What one learner message produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    pub round: u32,
    pub response: SystemResponse,
    /// The final quiz, when this message ended the session.
    pub final_quiz: Option<SystemResponse>,
    /// Events appended by this message, in log order.
    pub events: Vec<Event>,
}

/// A live tutoring session: state plus its full event log.
pub struct Session {
    gateway: Arc<Gateway>,
    state: SessionState,
    events: Vec<Event>,
}

impl Session {
    /// Designs the initial plan and produces the opening teach turn
    /// (round 0).
    pub fn start(
        gateway: Arc<Gateway>,
        spec: SessionSpec,
    ) -> Result<(Self, SystemResponse), EngineError> {
        let topic = spec.topic.trim().to_string();
        if topic.is_empty() {
            return Err(EngineError::Invalid("topic is empty".into()));
        }
        let mut runner = ToolRunner::new(&gateway);
        let design = runner.design_initial(&topic, spec.difficulty);
        let design_calls = runner.take_calls();
        let outline = design.map_err(|e| EngineError::from_tool(e, EngineError::Upstream))?;
        let plan = CoursePlan::from_outline(&outline, spec.difficulty)
            .map_err(|e| EngineError::Upstream(e.into()))?;

        let started = Event {
            round: 0,
            actor: ENGINE.into(),
            kind: EventKind::SessionStarted {
                session_id: spec.session_id,
                topic,
                difficulty: spec.difficulty,
                variant: spec.variant,
                short_term_capacity: spec.variant.short_term_capacity(),
                plan,
            },
            latency_ms: 0,
        };
        let state = SessionState::from_start(&started)?;
        let mut tx = Txn {
            state,
            events: vec![started],
            runner,
        };
        tx.log_calls(0, design_calls);

        let teach = tx.runner.teach(&tx.state.tool_context(0));
        tx.flush(0);
        let response = teach.map_err(|e| EngineError::from_tool(e, EngineError::Upstream))?;
        tx.emit(
            0,
            ToolTag::Teach.as_str(),
            response_event(None, response.clone(), false),
        )?;
        let Txn { state, events, .. } = tx;
        Ok((
            Self {
                gateway,
                state,
                events,
            },
            response,
        ))
    }

    /// Rebuilds a session from its event log.
    pub fn resume(gateway: Arc<Gateway>, events: Vec<Event>) -> Result<Self, ReplayError> {
        let state = SessionState::from_events(&events)?;
        Ok(Self {
            gateway,
            state,
            events,
        })
    }

    /// Rebuilds a session from a snapshot plus the events logged after it.
    pub fn resume_from(
        gateway: Arc<Gateway>,
        snapshot: SessionState,
        events: Vec<Event>,
    ) -> Result<Self, ReplayError> {
        let mut state = snapshot;
        for e in &events[state.events_applied.min(events.len())..] {
            state.apply(e)?;
        }
        if state.events_applied != events.len() {
            return Err(ReplayError::Apply {
                index: events.len(),
                kind: "snapshot",
                message: format!(
                    "snapshot covers {} events but the log has {}",
                    state.events_applied,
                    events.len()
                ),
            });
        }
        Ok(Self {
            gateway,
            state,
            events,
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Handles one learner message. On error nothing is recorded.
    pub fn handle_user_message(&mut self, text: &str) -> Result<TurnOutcome, EngineError> {
        if self.state.phase == Phase::Finished {
            return Err(EngineError::SessionFinished);
        }
        let mut tx = Txn {
            state: self.state.clone(),
            events: Vec::new(),
            runner: ToolRunner::new(&self.gateway),
        };
        let round = self.state.round + 1;
        let response = tx.interact(round, text)?;
        tx.record_round(round, text, &response.text)?;
        match tx.state.variant {
            Variant::Main => tx.reflect(round)?,
            Variant::NoReflection => tx.react_on_schedule(round)?,
            Variant::InteractionOnly => {}
        }
        let final_quiz = tx.maybe_finalize(round)?;

        let Txn { state, events, .. } = tx;
        self.state = state;
        self.events.extend(events.iter().cloned());
        Ok(TurnOutcome {
            round,
            response,
            final_quiz,
            events,
        })
    }
}

fn response_event(
    learner_text: Option<&str>,
    response: SystemResponse,
    final_quiz: bool,
) -> EventKind {
    EventKind::Response {
        learner_text: learner_text.map(str::to_string),
        response,
        final_quiz,
    }
}

/// Work on a copy of the state; committed only if the whole turn succeeds.
struct Txn<'g> {
    state: SessionState,
    events: Vec<Event>,
    runner: ToolRunner<'g>,
}

impl Txn<'_> {
    fn emit(&mut self, round: u32, actor: &str, kind: EventKind) -> Result<(), EngineError> {
        self.emit_timed(round, actor, kind, 0)
    }

    fn emit_timed(
        &mut self,
        round: u32,
        actor: &str,
        kind: EventKind,
        latency_ms: u64,
    ) -> Result<(), EngineError> {
        let event = Event {
            round,
            actor: actor.to_string(),
            kind,
            latency_ms,
        };
        self.state.apply(&event)?;
        self.events.push(event);
        Ok(())
    }

    /// Logs the model calls made since the last flush.
    fn flush(&mut self, round: u32) {
        let calls = self.runner.take_calls();
        self.log_calls(round, calls);
    }

    fn log_calls(&mut self, round: u32, calls: Vec<crate::tools::CallTrace>) {
        for call in calls {
            let (kind, latency) = match call.outcome {
                Ok(c) => (
                    EventKind::LlmCall {
                        template: call.template.to_string(),
                        prompt: call.prompt,
                        completion: c.text,
                        attempts: c.attempts,
                        temperature: c.decoding.temperature,
                        max_output_tokens: c.decoding.max_output_tokens,
                        timeout_ms: c.timeout_ms,
                    },
                    c.latency_ms,
                ),
                Err(e) => (
                    EventKind::LlmFailed {
                        template: call.template.to_string(),
                        prompt: call.prompt,
                        error: e.to_string(),
                    },
                    0,
                ),
            };
            // Call events never fail to apply.
            self.emit_timed(round, call.tool.as_str(), kind, latency)
                .expect("call events are state-neutral");
        }
    }

    /// Produces the learner-visible reply: evaluation when a quiz is
    /// pending, otherwise the routed tool, with teach as the fallback.
    fn interact(&mut self, round: u32, text: &str) -> Result<SystemResponse, EngineError> {
        if let Some(quiz) = self.state.pending_quiz.clone() {
            let result = self
                .runner
                .evaluate(&self.state.tool_context(round), text, &quiz);
            self.flush(round);
            match result {
                Ok(ev) => {
                    if let Some(reason) = ev.unstructured {
                        self.emit(
                            round,
                            ToolTag::Evaluation.as_str(),
                            EventKind::ParseFallback { reason },
                        )?;
                    }
                    self.emit(
                        round,
                        ToolTag::Evaluation.as_str(),
                        response_event(Some(text), ev.response.clone(), false),
                    )?;
                    return Ok(ev.response);
                }
                Err(e) if e.is_fatal() => {
                    return Err(EngineError::from_tool(e, EngineError::Retriable))
                }
                Err(e) => self.emit(
                    round,
                    ENGINE,
                    EventKind::Fallback {
                        from: ToolTag::Evaluation,
                        reason: e.to_string(),
                    },
                )?,
            }
            return self.teach(round, text);
        }

        let routed = self.runner.route(&self.state.tool_context(round), text);
        self.flush(round);
        let tool = match routed {
            Ok(r) => {
                let tool = r.decision.tool;
                if let Some(reason) = r.fallback {
                    self.emit(
                        round,
                        ToolTag::MetaAgent.as_str(),
                        EventKind::ParseFallback { reason },
                    )?;
                }
                self.emit(
                    round,
                    ToolTag::MetaAgent.as_str(),
                    EventKind::Routed {
                        tool,
                        rationale: r.decision.rationale,
                    },
                )?;
                tool
            }
            Err(e) if e.is_fatal() => {
                return Err(EngineError::from_tool(e, EngineError::Retriable))
            }
            Err(e) => {
                self.emit(
                    round,
                    ENGINE,
                    EventKind::Fallback {
                        from: ToolTag::MetaAgent,
                        reason: e.to_string(),
                    },
                )?;
                InteractionTool::Teach
            }
        };

        let result = {
            let ctx = self.state.tool_context(round);
            match tool {
                InteractionTool::Teach => return self.teach(round, text),
                InteractionTool::Answer => self.runner.answer(&ctx, text),
                InteractionTool::Quiz => self.runner.make_quiz(&ctx),
            }
        };
        self.flush(round);
        match result {
            Ok(response) => {
                self.emit(
                    round,
                    tool.tag().as_str(),
                    response_event(Some(text), response.clone(), false),
                )?;
                Ok(response)
            }
            Err(e) if e.is_fatal() => Err(EngineError::from_tool(e, EngineError::Retriable)),
            Err(e) => {
                self.emit(
                    round,
                    ENGINE,
                    EventKind::Fallback {
                        from: tool.tag(),
                        reason: e.to_string(),
                    },
                )?;
                self.teach(round, text)
            }
        }
    }

    fn teach(&mut self, round: u32, text: &str) -> Result<SystemResponse, EngineError> {
        let result = self.runner.teach(&self.state.tool_context(round));
        self.flush(round);
        let response = result.map_err(|e| EngineError::from_tool(e, EngineError::Retriable))?;
        self.emit(
            round,
            ToolTag::Teach.as_str(),
            response_event(Some(text), response.clone(), false),
        )?;
        Ok(response)
    }

    fn record_round(&mut self, round: u32, learner: &str, system: &str) -> Result<(), EngineError> {
        let gateway = self.runner.gateway();
        let embed = |text: &str| {
            let source = if text.trim().is_empty() {
                EMPTY_MESSAGE_PROXY
            } else {
                text
            };
            gateway
                .embed(source)
                .map_err(|e| EngineError::from_tool(e.into(), EngineError::Retriable))
        };
        let record = |speaker, text: &str| -> Result<MemoryRecord, EngineError> {
            Ok(MemoryRecord {
                round,
                speaker,
                text: text.to_string(),
                vector: embed(text)?,
            })
        };
        let kind = EventKind::RoundRecorded {
            learner: record(Speaker::Learner, learner)?,
            system: record(Speaker::System, system)?,
        };
        self.emit(round, MEMORY, kind)
    }

    /// Emits a no-op for a failed backend tool, or propagates a fatal
    /// failure.
    fn contain(&mut self, round: u32, tool: ToolTag, e: ToolError) -> Result<(), EngineError> {
        if e.is_fatal() {
            return Err(EngineError::from_tool(e, EngineError::Retriable));
        }
        self.emit(
            round,
            tool.as_str(),
            EventKind::Noop {
                tool,
                reason: e.to_string(),
            },
        )
    }

    /// Reflection for the main system: completion check every round,
    /// profile (then course redesign) on the difficulty schedule.
    fn reflect(&mut self, round: u32) -> Result<(), EngineError> {
        if self.state.plan.next_uncompleted().is_some() {
            let verdict = self
                .runner
                .check_objective_completion(&self.state.tool_context(round));
            self.flush(round);
            match verdict {
                Ok(v) => {
                    let actor = ToolTag::ObjectiveCompletion.as_str();
                    if v.parse_fallback {
                        self.emit(
                            round,
                            actor,
                            EventKind::ParseFallback {
                                reason: format!("no leading YES/NO in {:?}", v.rationale),
                            },
                        )?;
                    }
                    let completed = v.completed.then(|| v.objective.clone());
                    self.emit(round, actor, EventKind::Verdict(v))?;
                    if let Some(id) = completed {
                        self.emit(
                            round,
                            actor,
                            EventKind::ObjectiveCompleted { id: id.clone() },
                        )?;
                        self.generate_quiz(round, &id)?;
                    }
                }
                Err(e) => self.contain(round, ToolTag::ObjectiveCompletion, e)?,
            }
        }

        if self.state.schedule().is_due(round) {
            let profile = self
                .runner
                .generate_profile(&self.state.tool_context(round));
            self.flush(round);
            match profile {
                Ok(profile) => {
                    self.emit(
                        round,
                        ToolTag::ProfileGeneration.as_str(),
                        EventKind::ProfileUpdated { profile },
                    )?;
                    self.redesign(round)?;
                }
                // A failed profile suppresses the course redesign.
                Err(e) => self.contain(round, ToolTag::ProfileGeneration, e)?,
            }
        }
        Ok(())
    }

    /// Reaction without reflection: on the schedule, redesign from recent
    /// conversation and generate questions for the shallowest objective
    /// that has none.
    fn react_on_schedule(&mut self, round: u32) -> Result<(), EngineError> {
        if !self.state.schedule().is_due(round) {
            return Ok(());
        }
        self.redesign(round)?;
        let target = shallowest_unkeyed(&self.state);
        match target {
            Some(id) => self.generate_quiz(round, &id),
            None => self.emit(
                round,
                ToolTag::QuizGeneration.as_str(),
                EventKind::Noop {
                    tool: ToolTag::QuizGeneration,
                    reason: "every objective already has questions".into(),
                },
            ),
        }
    }

    fn redesign(&mut self, round: u32) -> Result<(), EngineError> {
        let proposed = self.runner.redesign(&self.state.tool_context(round));
        self.flush(round);
        let outline = match proposed {
            Ok(o) => o,
            Err(e) => return self.contain(round, ToolTag::CourseDesign, e),
        };
        let mut plan = self.state.plan.clone();
        let removed = match plan.apply_update(&outline) {
            Ok(r) => r,
            Err(e) => return self.contain(round, ToolTag::CourseDesign, e.into()),
        };
        let dropped_pool_keys: Vec<NodeId> = self
            .state
            .pool
            .keys()
            .filter(|id| !plan.contains(id))
            .cloned()
            .collect();
        self.emit(
            round,
            ToolTag::CourseDesign.as_str(),
            EventKind::PlanUpdated {
                plan,
                removed,
                dropped_pool_keys,
            },
        )
    }

    fn generate_quiz(&mut self, round: u32, objective: &NodeId) -> Result<(), EngineError> {
        let items = self
            .runner
            .generate_quiz(&self.state.tool_context(round), objective);
        self.flush(round);
        match items {
            Ok(items) => self.emit(
                round,
                ToolTag::QuizGeneration.as_str(),
                EventKind::QuizGenerated {
                    objective: objective.clone(),
                    items,
                },
            ),
            Err(e) => self.contain(round, ToolTag::QuizGeneration, e),
        }
    }

    /// Ends the session with a final quiz once every objective is
    /// completed or the round budget is spent.
    fn maybe_finalize(&mut self, round: u32) -> Result<Option<SystemResponse>, EngineError> {
        let reason = if self.state.plan.all_completed() {
            FinishReason::AllCompleted
        } else if round >= self.state.schedule().max_rounds {
            FinishReason::MaxRounds
        } else {
            return Ok(None);
        };
        let result = self.runner.final_quiz(&self.state.tool_context(round));
        self.flush(round);
        let quiz = result.map_err(|e| EngineError::from_tool(e, EngineError::Retriable))?;
        self.emit(
            round,
            ToolTag::FinalQuiz.as_str(),
            response_event(None, quiz.clone(), true),
        )?;
        self.emit(round, ENGINE, EventKind::SessionFinished { reason })?;
        Ok(Some(quiz))
    }
}

/// The shallowest objective with no questions in the pool, earliest in
/// pre-order among equals.
fn shallowest_unkeyed(state: &SessionState) -> Option<NodeId> {
    state
        .plan
        .root
        .preorder_with_depth()
        .filter(|(n, _)| !state.pool.is_keyed(&n.id))
        .min_by_key(|(_, depth)| *depth)
        .map(|(n, _)| n.id.clone())
}
