//! Learning-log statistics computed from an event log.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tutor_core::memory::{normalize_title, CoursePlan};
use tutor_core::orchestrator::{from_jsonl, FinishReason};
use tutor_core::tools::ResponseKind;
use tutor_core::{Difficulty, Event, EventKind, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub topic: String,
    pub difficulty: Difficulty,
    pub variant: Variant,
    /// Last learner round reached.
    pub rounds: u32,
    /// Replies counted below: one per learner round, final quiz excluded.
    pub responses: usize,
    /// Mean whitespace-delimited word count of those replies.
    pub avg_response_length: f64,
    /// Mean number of distinct plan titles each reply mentions verbatim
    /// (case-insensitive). A stand-in for hand-annotated objective counts.
    pub proxy_objectives: f64,
    /// Node count of the final plan.
    pub plan_complexity: usize,
    /// Plan revisions after the initial design.
    pub plan_updates: usize,
    /// Rounds between successive plan revisions.
    pub plan_update_intervals: Vec<u32>,
    /// In-course quiz replies.
    pub quizzes: usize,
    /// Rounds between successive in-course quiz replies.
    pub quiz_intervals: Vec<u32>,
    /// Model calls per tool, re-asks and failures included.
    pub tool_calls: BTreeMap<String, usize>,
    /// Replies per response kind.
    pub response_kinds: BTreeMap<String, usize>,
    pub finish: Option<FinishReason>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("event log is empty")]
    Empty,
    #[error("event log must start with session_started, found {0}")]
    MissingStart(&'static str),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{0}")]
    Inconsistent(String),
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Distinct plan titles that occur in `text`, compared case-insensitively
/// with whitespace collapsed.
pub fn objectives_mentioned(plan: &CoursePlan, text: &str) -> usize {
    let haystack = normalize_title(text);
    plan.root
        .preorder()
        .map(|n| normalize_title(&n.title))
        .filter(|t| !t.is_empty() && haystack.contains(t.as_str()))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Successive differences of a sorted round list.
pub fn gaps(rounds: &[u32]) -> Vec<u32> {
    rounds.windows(2).map(|w| w[1] - w[0]).collect()
}

pub fn stats_from_jsonl(text: &str) -> Result<RunStats, StatsError> {
    let events = from_jsonl(text).map_err(|(line, e)| StatsError::Malformed {
        line,
        message: e.to_string(),
    })?;
    compute_stats(&events)
}

/// Computes statistics from a full log. The round-0 opening turn is not
/// counted.
pub fn compute_stats(events: &[Event]) -> Result<RunStats, StatsError> {
    let first = events.first().ok_or(StatsError::Empty)?;
    let EventKind::SessionStarted {
        topic,
        difficulty,
        variant,
        plan,
        ..
    } = &first.kind
    else {
        return Err(StatsError::MissingStart(first.name()));
    };

    let mut plan = plan.clone();
    let mut rounds = 0;
    let mut words = 0usize;
    let mut mentioned = 0usize;
    let mut responses = 0usize;
    let mut plan_rounds = Vec::new();
    let mut quiz_rounds = Vec::new();
    let mut tool_calls = BTreeMap::new();
    let mut response_kinds = BTreeMap::new();
    let mut finish = None;

    for (i, e) in events.iter().enumerate().skip(1) {
        if e.round < rounds {
            return Err(StatsError::Inconsistent(format!(
                "event {i} is for round {} after round {rounds}",
                e.round
            )));
        }
        rounds = e.round;
        match &e.kind {
            EventKind::SessionStarted { .. } => {
                return Err(StatsError::Inconsistent(format!(
                    "event {i} starts a second session"
                )));
            }
            EventKind::LlmCall { .. } | EventKind::LlmFailed { .. } => {
                *tool_calls.entry(e.actor.clone()).or_insert(0) += 1;
            }
            EventKind::PlanUpdated { plan: p, .. } => {
                plan = p.clone();
                plan_rounds.push(e.round);
            }
            EventKind::Response {
                response,
                final_quiz,
                ..
            } if e.round > 0 && !final_quiz => {
                responses += 1;
                words += word_count(&response.text);
                mentioned += objectives_mentioned(&plan, &response.text);
                *response_kinds
                    .entry(response.kind.as_str().to_string())
                    .or_insert(0) += 1;
                if response.kind == ResponseKind::Quiz {
                    quiz_rounds.push(e.round);
                }
            }
            EventKind::SessionFinished { reason } => finish = Some(*reason),
            _ => {}
        }
    }

    let mean = |total: usize| {
        if responses == 0 {
            0.0
        } else {
            total as f64 / responses as f64
        }
    };
    Ok(RunStats {
        topic: topic.clone(),
        difficulty: *difficulty,
        variant: *variant,
        rounds,
        responses,
        avg_response_length: mean(words),
        proxy_objectives: mean(mentioned),
        plan_complexity: plan.node_count(),
        plan_updates: plan_rounds.len(),
        plan_update_intervals: gaps(&plan_rounds),
        quizzes: quiz_rounds.len(),
        quiz_intervals: gaps(&quiz_rounds),
        tool_calls,
        response_kinds,
        finish,
    })
}
