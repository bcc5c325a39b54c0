//! Parsers for the constrained completion formats.

use std::sync::LazyLock;

use regex::Regex;

use crate::memory::{NodeId, QuizError, QuizItem, QuizOption};

use super::{InteractionTool, Judgment};

/// First word of `text`, stripped of surrounding punctuation and upper-cased.
fn leading_token(text: &str) -> (String, &str) {
    let trimmed = text.trim_start();
    let end = trimmed
        .find(|c: char| !c.is_alphanumeric() && c != '_')
        .unwrap_or(trimmed.len());
    let token = trimmed[..end].to_uppercase();
    let rest = trimmed[end..].trim_start_matches(|c: char| {
        c.is_whitespace() || matches!(c, '-' | ':' | ',' | '.' | '\u{2014}' | '\u{2013}')
    });
    (token, rest.trim())
}

/// `TEACH` / `ANSWER` / `QUIZ` as the leading token, with the remainder as
/// rationale. `None` when the token is anything else.
pub fn parse_route(text: &str) -> Option<(InteractionTool, String)> {
    let (token, rest) = leading_token(text.trim_start_matches(['*', '`', '"']));
    let tool = match token.as_str() {
        "TEACH" => InteractionTool::Teach,
        "ANSWER" => InteractionTool::Answer,
        "QUIZ" => InteractionTool::Quiz,
        _ => return None,
    };
    Some((tool, rest.to_string()))
}

/// Leading `YES` / `NO`. `None` when neither.
pub fn parse_verdict(text: &str) -> Option<(bool, String)> {
    let (token, rest) = leading_token(text.trim_start_matches(['*', '`', '"']));
    match token.as_str() {
        "YES" => Some((true, rest.to_string())),
        "NO" => Some((false, rest.to_string())),
        _ => None,
    }
}

static FENCE_BLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```[A-Za-z]*[ \t]*\n(.*?)```").expect("valid regex"));
static STEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*STEM\s*:\s*(.*)$").expect("valid regex"));
static OPTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*OPTION\s+([A-E])\s*[:.)]\s*(.*)$").expect("valid regex"));
static ANSWER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*ANSWER\s*:\s*\(?([A-Za-z])\)?\b.*$").expect("valid regex")
});

/// Outcome of parsing a block of multiple-choice questions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McqParse {
    pub items: Vec<QuizItem>,
    /// Questions that were recognised but failed validation.
    pub rejected: Vec<String>,
}

#[derive(Default)]
struct Draft {
    stem: String,
    options: Vec<QuizOption>,
    answer: Option<String>,
}

/// Parses `STEM:` / `OPTION X:` / `ANSWER:` questions from fenced blocks (or
/// from the whole text when it has no fences). Invalid questions are
/// reported in `rejected` and skipped.
pub fn parse_mcq(text: &str, objective_id: &NodeId, source_round: u32) -> McqParse {
    let blocks: Vec<&str> = FENCE_BLOCK
        .captures_iter(text)
        .map(|c| c.get(1).unwrap().as_str())
        .collect();
    let bodies = if blocks.is_empty() {
        vec![text]
    } else {
        blocks
    };

    let mut drafts: Vec<Draft> = Vec::new();
    for body in bodies {
        for line in body.lines() {
            if let Some(c) = STEM.captures(line) {
                drafts.push(Draft {
                    stem: c[1].trim().to_string(),
                    ..Draft::default()
                });
            } else if let Some(d) = drafts.last_mut() {
                if let Some(c) = OPTION.captures(line) {
                    d.options.push(QuizOption {
                        label: c[1].to_uppercase(),
                        text: c[2].trim().to_string(),
                    });
                } else if let Some(c) = ANSWER.captures(line) {
                    d.answer = Some(c[1].to_uppercase());
                }
            }
        }
    }

    let mut out = McqParse {
        items: Vec::new(),
        rejected: Vec::new(),
    };
    for d in drafts {
        let result = match d.answer {
            Some(key) => QuizItem::new(
                objective_id.clone(),
                d.stem.clone(),
                d.options,
                key,
                source_round,
            ),
            None => Err(QuizError::BadAnswerKey(String::new())),
        };
        match result {
            Ok(item) => out.items.push(item),
            Err(e) => out.rejected.push(format!("{:?}: {e}", d.stem)),
        }
    }
    out
}

static JUDGMENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*\**Q(\d+)\**\s*[:.)]\s*(NONE|-|[A-Z])\s*\|\s*(CORRECT|INCORRECT)\s*(?:\|\s*(.*))?$")
        .expect("valid regex")
});

/// One `Qn: <label> | CORRECT|INCORRECT | feedback` line per question,
/// numbered 1..=count, each exactly once.
pub fn parse_judgments(text: &str, count: usize) -> Result<Vec<Judgment>, String> {
    let mut slots: Vec<Option<Judgment>> = vec![None; count];
    for line in text.lines() {
        let Some(c) = JUDGMENT.captures(line) else {
            continue;
        };
        let n: usize = c[1]
            .parse()
            .map_err(|_| format!("bad question number {:?}", &c[1]))?;
        if n == 0 || n > count {
            return Err(format!(
                "judgment for question {n}, but the quiz has {count}"
            ));
        }
        if slots[n - 1].is_some() {
            return Err(format!("question {n} judged twice"));
        }
        let label = c[2].to_uppercase();
        slots[n - 1] = Some(Judgment {
            parsed_answer: (label != "NONE" && label != "-").then_some(label),
            correct: c[3].eq_ignore_ascii_case("CORRECT"),
            feedback: c
                .get(4)
                .map_or(String::new(), |m| m.as_str().trim().to_string()),
        });
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, j)| j.ok_or_else(|| format!("no judgment for question {}", i + 1)))
        .collect()
}
