//! The prompted tools. Each one gathers the memories it is allowed to see,
//! renders its template, calls the gateway and parses the completion.
//!
//! Tools hold no state between calls. A [`ToolRunner`] records every model
//! call (prompt, completion or error) so the orchestrator can log it.

pub mod parse;
pub mod prompts;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Completion, Gateway, GatewayError, TemplateError};
use crate::memory::{
    outline, CoursePlan, LearningHistory, LearningProfile, NodeId, ObjectiveNode, OutlineNode,
    PlanError, QuizError, QuizItem, QuizPool, Retrieved,
};
use crate::types::{Difficulty, ToolTag, Variant};

use prompts as p;

/// Long-term records retrieved for answer, evaluation and quiz generation.
pub const RETRIEVAL_K: usize = 5;
/// Long-term records retrieved for the final quiz.
pub const FINAL_QUIZ_K: usize = 20;
/// Most questions one in-course quiz may hold.
pub const QUIZ_CAP: usize = 5;
/// Questions requested per objective from quiz generation.
pub const MCQ_REQUESTED: usize = 2;
/// Most questions kept per quiz-generation call.
pub const MCQ_KEPT: usize = 3;
/// Questions requested for the final quiz.
pub const FINAL_QUIZ_QUESTIONS: usize = 5;

/// The tools the meta agent may route to. Evaluation is never routed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionTool {
    Teach,
    Answer,
    Quiz,
}

impl InteractionTool {
    pub fn tag(self) -> ToolTag {
        match self {
            InteractionTool::Teach => ToolTag::Teach,
            InteractionTool::Answer => ToolTag::Answer,
            InteractionTool::Quiz => ToolTag::Quiz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub tool: InteractionTool,
    pub rationale: String,
}

/// A route decision plus the reason it had to fall back to teach, if it did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Routed {
    pub decision: RouteDecision,
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Teach,
    Answer,
    Quiz,
    Evaluation,
}

impl ResponseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::Teach => "teach",
            ResponseKind::Answer => "answer",
            ResponseKind::Quiz => "quiz",
            ResponseKind::Evaluation => "evaluation",
        }
    }
}

/// Verdict on one quiz question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub parsed_answer: Option<String>,
    pub correct: bool,
    pub feedback: String,
}

/// The learner-visible reply to one message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemResponse {
    pub kind: ResponseKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quiz_items: Option<Vec<QuizItem>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgments: Option<Vec<Judgment>>,
}

impl SystemResponse {
    pub fn teach(text: impl Into<String>) -> Self {
        Self::plain(ResponseKind::Teach, text)
    }

    pub fn answer(text: impl Into<String>) -> Self {
        Self::plain(ResponseKind::Answer, text)
    }

    pub fn quiz(text: impl Into<String>, items: Vec<QuizItem>) -> Self {
        Self {
            kind: ResponseKind::Quiz,
            text: text.into(),
            quiz_items: Some(items),
            judgments: None,
        }
    }

    /// An evaluation reply; `judgments` is `None` when the model's grading
    /// could not be parsed.
    pub fn evaluation(text: impl Into<String>, judgments: Option<Vec<Judgment>>) -> Self {
        Self {
            kind: ResponseKind::Evaluation,
            text: text.into(),
            quiz_items: None,
            judgments,
        }
    }

    fn plain(kind: ResponseKind, text: impl Into<String>) -> Self {
        Self {
            kind,
            text: text.into(),
            quiz_items: None,
            judgments: None,
        }
    }
}

/// Result of the objective-completion check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionVerdict {
    pub objective: NodeId,
    pub completed: bool,
    pub rationale: String,
    /// Set when the completion had no leading YES/NO and was read as NO.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub parse_fallback: bool,
}

/// Evaluation reply plus the reason grading fell back to unstructured text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluated {
    pub response: SystemResponse,
    pub unstructured: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToolError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("every objective is completed; there is no current objective")]
    NoCurrentObjective,
    #[error("no quiz questions are available for the eligible objectives")]
    EmptyQuizPool,
    #[error("there is no pending quiz to evaluate")]
    NoPendingQuiz,
    #[error("the learner's question is empty")]
    EmptyQuestion,
    #[error("objective {0} has not been completed")]
    NotCompleted(NodeId),
    #[error("unknown objective {0}")]
    UnknownObjective(NodeId),
    #[error("could not use the {tool} completion: {message}")]
    Parse { tool: ToolTag, message: String },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Quiz(#[from] QuizError),
}

impl ToolError {
    pub fn is_fatal(&self) -> bool {
        matches!(self, ToolError::Gateway(e) if e.is_fatal())
    }
}

/// Read-only view of one session's memories for the duration of a call.
#[derive(Debug, Clone, Copy)]
pub struct ToolContext<'a> {
    pub topic: &'a str,
    pub difficulty: Difficulty,
    pub variant: Variant,
    pub plan: &'a CoursePlan,
    pub profile: &'a LearningProfile,
    pub history: &'a LearningHistory,
    pub pool: &'a QuizPool,
    /// The round being processed.
    pub round: u32,
    /// Round of the most recent in-course quiz, if any.
    pub last_quiz_round: Option<u32>,
}

impl ToolContext<'_> {
    pub fn current_objective(&self) -> Option<&ObjectiveNode> {
        self.plan.next_uncompleted()
    }

    fn uses_long_term(&self) -> bool {
        self.variant != Variant::InteractionOnly
    }
}

/// One model call made by a tool.
#[derive(Debug, Clone, PartialEq)]
pub struct CallTrace {
    pub tool: ToolTag,
    pub template: &'static str,
    pub prompt: String,
    pub outcome: Result<Completion, GatewayError>,
}

/// Invokes tools against a gateway and keeps a trace of every model call.
pub struct ToolRunner<'g> {
    gateway: &'g Gateway,
    calls: Vec<CallTrace>,
}

type Bindings = HashMap<&'static str, String>;

impl<'g> ToolRunner<'g> {
    pub fn new(gateway: &'g Gateway) -> Self {
        Self {
            gateway,
            calls: Vec::new(),
        }
    }

    pub fn gateway(&self) -> &'g Gateway {
        self.gateway
    }

    /// Model calls made since the last call to this method.
    pub fn take_calls(&mut self) -> Vec<CallTrace> {
        std::mem::take(&mut self.calls)
    }

    fn call(
        &mut self,
        tool: ToolTag,
        template: &'static str,
        bindings: &Bindings,
    ) -> Result<(String, String), ToolError> {
        let prompt = self.gateway.render_prompt(template, bindings)?;
        let text = self.send(tool, template, prompt.clone())?;
        Ok((prompt, text))
    }

    fn send(
        &mut self,
        tool: ToolTag,
        template: &'static str,
        prompt: String,
    ) -> Result<String, ToolError> {
        let outcome = self.gateway.complete(tool, prompt.clone());
        let text = outcome
            .as_ref()
            .map(|c| c.text.clone())
            .map_err(Clone::clone);
        self.calls.push(CallTrace {
            tool,
            template,
            prompt,
            outcome,
        });
        Ok(text?)
    }

    /// Repeats `prompt` once with a note on what was wrong with the reply.
    fn reask(&mut self, tool: ToolTag, prompt: &str, problem: &str) -> Result<String, ToolError> {
        let mut b = Bindings::new();
        b.insert("prompt", prompt.to_string());
        b.insert("problem", problem.to_string());
        let reask = self.gateway.render_prompt(p::REASK, &b)?;
        self.send(tool, p::REASK, reask)
    }

    fn retrieve(
        &self,
        history: &LearningHistory,
        query: &str,
        k: usize,
    ) -> Result<String, ToolError> {
        if history.long_term().is_empty() {
            return Ok(String::new());
        }
        let q = self.gateway.embed(query)?;
        Ok(render_retrieved(&history.retrieve_relevant(&q, k)))
    }

    /// Meta agent: picks the interaction tool for a learner message. An
    /// unusable completion falls back to teach.
    pub fn route(&mut self, ctx: &ToolContext<'_>, message: &str) -> Result<Routed, ToolError> {
        let mut b = base(ctx);
        b.insert("message", message.to_string());
        b.insert("short_term", render_short_term(ctx.history));
        b.insert("quiz_status", quiz_status(ctx));
        let template = if ctx.variant == Variant::Main {
            b.insert("objective", objective_text(ctx.current_objective()));
            p::META_AGENT
        } else {
            b.insert("plan", ctx.plan.render_outline());
            p::META_AGENT_PLAN
        };
        let (_, text) = self.call(ToolTag::MetaAgent, template, &b)?;
        Ok(match parse::parse_route(&text) {
            Some((tool, rationale)) => Routed {
                decision: RouteDecision { tool, rationale },
                fallback: None,
            },
            None => Routed {
                decision: RouteDecision {
                    tool: InteractionTool::Teach,
                    rationale: String::new(),
                },
                fallback: Some(format!("no TEACH/ANSWER/QUIZ token in {:?}", clip(&text))),
            },
        })
    }

    /// Teach tool. The main variant teaches the current objective; the
    /// ablations only see the plan and recent conversation.
    pub fn teach(&mut self, ctx: &ToolContext<'_>) -> Result<SystemResponse, ToolError> {
        let mut b = base(ctx);
        b.insert(
            "difficulty_text",
            p::teach_instruction(ctx.difficulty).to_string(),
        );
        b.insert("short_term", render_short_term(ctx.history));
        let template = if ctx.variant == Variant::Main {
            let objective = ctx
                .current_objective()
                .ok_or(ToolError::NoCurrentObjective)?;
            b.insert("objective", objective.title.clone());
            b.insert("profile", profile_text(ctx.profile));
            p::TEACH
        } else {
            b.insert("plan", ctx.plan.render_outline());
            p::TEACH_PLAN
        };
        let (_, text) = self.call(ToolTag::Teach, template, &b)?;
        Ok(SystemResponse::teach(text))
    }

    pub fn answer(
        &mut self,
        ctx: &ToolContext<'_>,
        question: &str,
    ) -> Result<SystemResponse, ToolError> {
        if question.trim().is_empty() {
            return Err(ToolError::EmptyQuestion);
        }
        let mut b = base(ctx);
        b.insert("question", question.to_string());
        b.insert("short_term", render_short_term(ctx.history));
        let template = if ctx.uses_long_term() {
            b.insert(
                "retrieved",
                self.retrieve(ctx.history, question, RETRIEVAL_K)?,
            );
            p::ANSWER
        } else {
            p::ANSWER_SHORT_TERM
        };
        let (_, text) = self.call(ToolTag::Answer, template, &b)?;
        Ok(SystemResponse::answer(text))
    }

    /// Quiz tool: picks questions from the pool and asks the model for a
    /// short lead-in.
    pub fn make_quiz(&mut self, ctx: &ToolContext<'_>) -> Result<SystemResponse, ToolError> {
        let items = select_quiz(ctx);
        if items.is_empty() {
            return Err(ToolError::EmptyQuizPool);
        }
        let block = render_items(&items, false);
        let mut b = base(ctx);
        b.insert("pool", block.clone());
        let template = if ctx.variant == Variant::Main {
            b.insert("profile", profile_text(ctx.profile));
            p::QUIZ
        } else {
            p::QUIZ_POOL_ONLY
        };
        let (_, lead) = self.call(ToolTag::Quiz, template, &b)?;
        let text = format!("{}\n\n{block}\n\n{ANSWER_HINT}", lead.trim());
        Ok(SystemResponse::quiz(text, items))
    }

    /// Grades the learner's reply to the pending quiz. An empty reply is
    /// judged all-incorrect without a model call.
    pub fn evaluate(
        &mut self,
        ctx: &ToolContext<'_>,
        learner_answer: &str,
        pending: &[QuizItem],
    ) -> Result<Evaluated, ToolError> {
        if pending.is_empty() {
            return Err(ToolError::NoPendingQuiz);
        }
        if learner_answer.trim().is_empty() {
            let judgments = pending
                .iter()
                .map(|q| Judgment {
                    parsed_answer: None,
                    correct: false,
                    feedback: format!("No answer given; the correct option is {}.", q.answer_key),
                })
                .collect();
            let keys: Vec<String> = pending
                .iter()
                .enumerate()
                .map(|(i, q)| format!("{}{}", i + 1, q.answer_key))
                .collect();
            let text = format!("No answer was received, so every question is marked incorrect. The correct answers are {}.", keys.join(" "));
            return Ok(Evaluated {
                response: SystemResponse::evaluation(text, Some(judgments)),
                unstructured: None,
            });
        }

        let mut b = base(ctx);
        b.insert("quiz", render_items(pending, true));
        b.insert("learner_answer", learner_answer.to_string());
        b.insert("judgment_format", p::judgment_format(pending.len()));
        let template = if ctx.uses_long_term() {
            b.insert("retrieved", self.retrieve_for_stems(ctx.history, pending)?);
            p::EVALUATION
        } else {
            b.insert("short_term", render_short_term(ctx.history));
            p::EVALUATION_SHORT_TERM
        };
        let (prompt, text) = self.call(ToolTag::Evaluation, template, &b)?;
        let problem = match parse::parse_judgments(&text, pending.len()) {
            Ok(j) => {
                return Ok(Evaluated {
                    response: SystemResponse::evaluation(text, Some(j)),
                    unstructured: None,
                })
            }
            Err(problem) => problem,
        };
        let retry = self.reask(ToolTag::Evaluation, &prompt, &problem)?;
        Ok(match parse::parse_judgments(&retry, pending.len()) {
            Ok(j) => Evaluated {
                response: SystemResponse::evaluation(retry, Some(j)),
                unstructured: None,
            },
            Err(problem) => Evaluated {
                response: SystemResponse::evaluation(retry, None),
                unstructured: Some(problem),
            },
        })
    }

    /// Records relevant to any of the quiz stems, best matches per stem
    /// first, without repeats.
    fn retrieve_for_stems(
        &self,
        history: &LearningHistory,
        items: &[QuizItem],
    ) -> Result<String, ToolError> {
        if history.long_term().is_empty() {
            return Ok(String::new());
        }
        let mut seen = HashSet::new();
        let mut merged: Vec<Retrieved<'_>> = Vec::new();
        for item in items {
            let q = self.gateway.embed(&item.stem)?;
            for r in history.retrieve_relevant(&q, RETRIEVAL_K) {
                if seen.insert((r.record.round, r.record.speaker)) {
                    merged.push(r);
                }
            }
        }
        Ok(render_retrieved(&merged))
    }

    /// Profile generation. An empty completion is rejected so the profile
    /// text is never blank after its first version.
    pub fn generate_profile(
        &mut self,
        ctx: &ToolContext<'_>,
    ) -> Result<LearningProfile, ToolError> {
        let mut b = base(ctx);
        b.insert("profile", profile_text(ctx.profile));
        b.insert("short_term", render_short_term(ctx.history));
        let (_, text) = self.call(ToolTag::ProfileGeneration, p::PROFILE_GENERATION, &b)?;
        if text.trim().is_empty() {
            return Err(ToolError::Parse {
                tool: ToolTag::ProfileGeneration,
                message: "empty profile".into(),
            });
        }
        Ok(ctx.profile.next(text, ctx.round))
    }

    /// Objective-completion check. Anything but a leading YES/NO reads as
    /// NO with `parse_fallback` set.
    pub fn check_objective_completion(
        &mut self,
        ctx: &ToolContext<'_>,
    ) -> Result<CompletionVerdict, ToolError> {
        let objective = ctx
            .current_objective()
            .ok_or(ToolError::NoCurrentObjective)?;
        let mut b = base(ctx);
        b.insert("objective", objective.title.clone());
        b.insert("short_term", render_short_term(ctx.history));
        let (_, text) = self.call(ToolTag::ObjectiveCompletion, p::OBJECTIVE_COMPLETION, &b)?;
        Ok(match parse::parse_verdict(&text) {
            Some((completed, rationale)) => CompletionVerdict {
                objective: objective.id.clone(),
                completed,
                rationale,
                parse_fallback: false,
            },
            None => CompletionVerdict {
                objective: objective.id.clone(),
                completed: false,
                rationale: clip(&text),
                parse_fallback: true,
            },
        })
    }

    /// Initial course design for a new session.
    pub fn design_initial(
        &mut self,
        topic: &str,
        difficulty: Difficulty,
    ) -> Result<OutlineNode, ToolError> {
        let mut b = Bindings::new();
        b.insert("topic", topic.to_string());
        b.insert(
            "difficulty_text",
            p::course_design_instruction(difficulty).to_string(),
        );
        b.insert("outline_format", p::outline_format().to_string());
        self.design(p::COURSE_DESIGN_INITIAL, &b, topic, difficulty)
    }

    /// Course redesign: from the profile in the main variant, from recent
    /// conversation in the no-reflection ablation.
    pub fn redesign(&mut self, ctx: &ToolContext<'_>) -> Result<OutlineNode, ToolError> {
        let mut b = base(ctx);
        b.insert(
            "difficulty_text",
            p::course_design_instruction(ctx.difficulty).to_string(),
        );
        b.insert("outline_format", p::outline_format().to_string());
        b.insert("plan", ctx.plan.render_outline());
        let template = match ctx.variant {
            Variant::Main => {
                b.insert("profile", profile_text(ctx.profile));
                p::COURSE_DESIGN_PROFILE
            }
            _ => {
                b.insert("short_term", render_short_term(ctx.history));
                p::COURSE_DESIGN_HISTORY
            }
        };
        self.design(template, &b, ctx.topic, ctx.difficulty)
    }

    fn design(
        &mut self,
        template: &'static str,
        b: &Bindings,
        topic: &str,
        difficulty: Difficulty,
    ) -> Result<OutlineNode, ToolError> {
        let (prompt, text) = self.call(ToolTag::CourseDesign, template, b)?;
        let problem = match outline_for(&text, topic, difficulty) {
            Ok(tree) => return Ok(tree),
            Err(e) => e,
        };
        let retry = self.reask(ToolTag::CourseDesign, &prompt, &problem.to_string())?;
        outline_for(&retry, topic, difficulty)
    }

    /// Quiz generation for one objective. Keeps up to [`MCQ_KEPT`] valid
    /// questions; zero valid questions after one re-ask is an error.
    pub fn generate_quiz(
        &mut self,
        ctx: &ToolContext<'_>,
        objective: &NodeId,
    ) -> Result<Vec<QuizItem>, ToolError> {
        let node = ctx
            .plan
            .get(objective)
            .ok_or_else(|| ToolError::UnknownObjective(objective.clone()))?;
        if ctx.variant == Variant::Main && !node.is_completed() {
            return Err(ToolError::NotCompleted(objective.clone()));
        }
        let mut b = base(ctx);
        b.insert("count", MCQ_REQUESTED.to_string());
        b.insert("objective", node.title.clone());
        b.insert(
            "retrieved",
            self.retrieve(ctx.history, &node.title, RETRIEVAL_K)?,
        );
        b.insert("mcq_format", p::mcq_format().to_string());
        let (prompt, text) = self.call(ToolTag::QuizGeneration, p::QUIZ_GENERATION, &b)?;
        let mut items = parse::parse_mcq(&text, objective, ctx.round).items;
        if items.is_empty() {
            let retry = self.reask(
                ToolTag::QuizGeneration,
                &prompt,
                "no well-formed question with a valid answer key was found",
            )?;
            items = parse::parse_mcq(&retry, objective, ctx.round).items;
        }
        if items.is_empty() {
            return Err(ToolError::Parse {
                tool: ToolTag::QuizGeneration,
                message: "no valid multiple-choice question".into(),
            });
        }
        items.truncate(MCQ_KEPT);
        Ok(items)
    }

    /// Final quiz: from the 20 most topic-relevant records, or from the
    /// plan outline when long-term history is unavailable. If no question
    /// parses after one re-ask, the model text is returned as-is.
    pub fn final_quiz(&mut self, ctx: &ToolContext<'_>) -> Result<SystemResponse, ToolError> {
        let mut b = base(ctx);
        b.insert("count", FINAL_QUIZ_QUESTIONS.to_string());
        b.insert("mcq_format", p::mcq_format().to_string());
        let template = if ctx.uses_long_term() {
            b.insert(
                "retrieved",
                self.retrieve(ctx.history, ctx.topic, FINAL_QUIZ_K)?,
            );
            p::FINAL_QUIZ_HISTORY
        } else {
            b.insert("plan", ctx.plan.render_outline());
            p::FINAL_QUIZ_PLAN
        };
        let root = &ctx.plan.root.id;
        let (prompt, text) = self.call(ToolTag::FinalQuiz, template, &b)?;
        let mut parsed = parse::parse_mcq(&text, root, ctx.round).items;
        let mut raw = text;
        if parsed.is_empty() {
            raw = self.reask(
                ToolTag::FinalQuiz,
                &prompt,
                "no well-formed question with a valid answer key was found",
            )?;
            parsed = parse::parse_mcq(&raw, root, ctx.round).items;
        }
        if parsed.is_empty() {
            return Ok(SystemResponse::quiz(raw, Vec::new()));
        }
        parsed.truncate(FINAL_QUIZ_QUESTIONS);
        let text = format!(
            "The course is complete. Here is your final quiz on {}.\n\n{}\n\n{ANSWER_HINT}",
            ctx.topic,
            render_items(&parsed, false)
        );
        Ok(SystemResponse::quiz(text, parsed))
    }
}

const ANSWER_HINT: &str = "Reply with one letter per question, for example \"1A 2C\".";

fn base(ctx: &ToolContext<'_>) -> Bindings {
    let mut b = Bindings::new();
    b.insert("topic", ctx.topic.to_string());
    b
}

fn clip(text: &str) -> String {
    const MAX: usize = 200;
    let t = text.trim();
    match t.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &t[..i]),
        None => t.to_string(),
    }
}

fn objective_text(node: Option<&ObjectiveNode>) -> String {
    node.map_or_else(
        || "(every objective is completed)".to_string(),
        |n| n.title.clone(),
    )
}

fn profile_text(profile: &LearningProfile) -> String {
    if profile.is_empty() {
        "(no profile yet)".into()
    } else {
        profile.text.clone()
    }
}

fn quiz_status(ctx: &ToolContext<'_>) -> String {
    let last = match ctx.last_quiz_round {
        Some(r) => format!(
            "Last quiz: round {r}, {} round(s) ago.",
            ctx.round.saturating_sub(r)
        ),
        None => "No quiz has been given yet.".into(),
    };
    let available = eligible_objectives(ctx)
        .iter()
        .filter(|id| ctx.pool.is_keyed(id))
        .count();
    format!("{last} Objectives with quiz questions ready: {available}.")
}

/// Recent rounds, oldest first, as a `Learner:` / `Tutor:` transcript.
pub fn render_short_term(history: &LearningHistory) -> String {
    if history.short_term().len() == 0 {
        return "(no conversation yet)".into();
    }
    history
        .short_term()
        .map(|r| {
            format!(
                "[round {}]\nLearner: {}\nTutor: {}",
                r.index, r.learner, r.system
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// One `[round N, speaker] text` line per record.
pub fn render_retrieved(records: &[Retrieved<'_>]) -> String {
    records
        .iter()
        .map(|r| {
            let speaker = match r.record.speaker {
                crate::memory::Speaker::Learner => "learner",
                crate::memory::Speaker::System => "tutor",
            };
            format!("[round {}, {speaker}] {}", r.record.round, r.record.text)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Numbered questions; with `keys`, each is followed by its answer key.
pub fn render_items(items: &[QuizItem], keys: bool) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut s = q.render(i + 1);
            if keys {
                s.push_str(&format!("\n   Answer key: {}", q.answer_key));
            }
            s
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Objectives whose questions the quiz tool may use: completed ones in the
/// main variant, every keyed one in the no-reflection ablation, none when
/// the ablation has no pool. Plan pre-order.
pub fn eligible_objectives(ctx: &ToolContext<'_>) -> Vec<NodeId> {
    match ctx.variant {
        Variant::Main => ctx.plan.completed().map(|n| n.id.clone()).collect(),
        Variant::NoReflection => ctx
            .plan
            .root
            .preorder()
            .filter(|n| ctx.pool.is_keyed(&n.id))
            .map(|n| n.id.clone())
            .collect(),
        Variant::InteractionOnly => Vec::new(),
    }
}

/// One question per eligible objective (its newest), at most
/// [`QUIZ_CAP`]. When more objectives qualify, those with the newest
/// questions win. The result keeps plan pre-order.
pub fn select_quiz(ctx: &ToolContext<'_>) -> Vec<QuizItem> {
    let mut picks: Vec<(usize, &QuizItem)> = eligible_objectives(ctx)
        .iter()
        .filter_map(|id| {
            // max_by_key returns the last maximum: the newest on equal rounds.
            ctx.pool.get(id).iter().max_by_key(|q| q.source_round)
        })
        .enumerate()
        .collect();
    if picks.len() > QUIZ_CAP {
        picks.sort_by(|a, b| b.1.source_round.cmp(&a.1.source_round).then(a.0.cmp(&b.0)));
        picks.truncate(QUIZ_CAP);
        picks.sort_by_key(|(i, _)| *i);
    }
    picks.into_iter().map(|(_, q)| q.clone()).collect()
}

/// Turns a course-design completion into a plan outline rooted at the
/// topic, checking the plan invariants.
pub fn outline_for(
    text: &str,
    topic: &str,
    difficulty: Difficulty,
) -> Result<OutlineNode, ToolError> {
    let forest = outline::parse(text).map_err(|e| ToolError::Parse {
        tool: ToolTag::CourseDesign,
        message: e.to_string(),
    })?;
    let root = match forest.as_slice() {
        [single]
            if crate::memory::normalize_title(&single.title)
                == crate::memory::normalize_title(topic) =>
        {
            let mut root = single.clone();
            root.title = topic.trim().to_string();
            root
        }
        _ => OutlineNode::new(topic.trim()).with_children(forest),
    };
    let mut root = root;
    clear_status(&mut root);
    CoursePlan::from_outline(&root, difficulty)?;
    Ok(root)
}

// Statuses are owned by the engine, never by the model.
fn clear_status(node: &mut OutlineNode) {
    node.completed = false;
    node.children.iter_mut().for_each(clear_status);
}

#[cfg(test)]
mod tests;
