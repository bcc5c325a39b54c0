#![allow(dead_code)]

use tutor_core::memory::{CoursePlan, OutlineNode, QuizItem, QuizOption};
use tutor_core::orchestrator::{Event, EventKind, FinishReason};
use tutor_core::{Difficulty, SystemResponse, Variant};

fn ev(round: u32, actor: &str, kind: EventKind) -> Event {
    Event {
        round,
        actor: actor.into(),
        kind,
        latency_ms: 0,
    }
}

/// `lead` followed by filler up to `words` words.
pub fn text(lead: &str, words: usize) -> String {
    let mut out: Vec<&str> = lead.split_whitespace().collect();
    assert!(out.len() <= words);
    out.resize(words, "lorem");
    out.join(" ")
}

fn llm(round: u32, actor: &str) -> Event {
    ev(
        round,
        actor,
        EventKind::LlmCall {
            template: actor.into(),
            prompt: "p".into(),
            completion: "c".into(),
            attempts: 1,
            temperature: 0.0,
            max_output_tokens: 512,
            timeout_ms: 30000,
        },
    )
}

fn reply(round: u32, actor: &str, response: SystemResponse, final_quiz: bool) -> Event {
    ev(
        round,
        actor,
        EventKind::Response {
            learner_text: (round > 0 && !final_quiz).then(|| format!("message {round}")),
            response,
            final_quiz,
        },
    )
}

fn outline(extra: &[&str]) -> OutlineNode {
    let mut top = vec![
        OutlineNode::new("Weathering").with_children(vec![OutlineNode::new("Frost")]),
        OutlineNode::new("Transport"),
        OutlineNode::new("Deposition"),
    ];
    top.extend(extra.iter().map(|t| OutlineNode::new(*t)));
    OutlineNode::new("Erosion").with_children(top)
}

/// Per round: (kind, words, lead text). Round 0 and the final quiz carry
/// long texts that must not be counted.
pub const ROUNDS: [(&str, usize, &str); 12] = [
    ("teach", 10, "Erosion shapes land through weathering"),
    ("answer", 20, ""),
    ("quiz", 15, ""),
    ("evaluation", 5, ""),
    ("teach", 30, "Transport"),
    ("teach", 12, ""),
    ("quiz", 8, ""),
    ("evaluation", 6, ""),
    ("answer", 25, ""),
    ("teach", 14, ""),
    ("quiz", 9, ""),
    ("evaluation", 6, ""),
];

/// Rounds with a plan revision and the titles added at each.
pub const REVISIONS: [(u32, &[&str]); 4] = [
    (2, &["Coasts"]),
    (5, &["Coasts"]),
    (9, &["Coasts", "Glaciers"]),
    (12, &["Coasts", "Glaciers"]),
];

/// A hand-built 12-round main-variant log at level 3.
pub fn twelve_round_log() -> Vec<Event> {
    let d = Difficulty::new(3).unwrap();
    let mut plan = CoursePlan::from_outline(&outline(&[]), d).unwrap();
    let mut events = vec![ev(
        0,
        "engine",
        EventKind::SessionStarted {
            session_id: "fixture".into(),
            topic: "Erosion".into(),
            difficulty: d,
            variant: Variant::Main,
            short_term_capacity: 5,
            plan: plan.clone(),
        },
    )];
    events.push(llm(0, "course_design"));
    events.push(llm(0, "teach"));
    events.push(reply(
        0,
        "teach",
        SystemResponse::teach(text("Erosion weathering transport", 100)),
        false,
    ));

    let item = QuizItem::new(
        plan.root.id.clone(),
        "Which agent splits rock?",
        vec![
            QuizOption {
                label: "A".into(),
                text: "Frost".into(),
            },
            QuizOption {
                label: "B".into(),
                text: "Sun".into(),
            },
        ],
        "A",
        1,
    )
    .unwrap();

    for (i, (kind, words, lead)) in ROUNDS.iter().enumerate() {
        let round = i as u32 + 1;
        let body = text(lead, *words);
        let response = match *kind {
            "teach" => SystemResponse::teach(body),
            "answer" => SystemResponse::answer(body),
            "quiz" => SystemResponse::quiz(body, vec![item.clone()]),
            _ => SystemResponse::evaluation(body, None),
        };
        if *kind != "evaluation" {
            events.push(llm(round, "meta_agent"));
        }
        if *kind != "quiz" {
            events.push(llm(round, kind));
        }
        events.push(reply(round, kind, response, false));
        if let Some((_, extra)) = REVISIONS.iter().find(|(r, _)| *r == round) {
            let mut next = plan.clone();
            let removed = next.apply_update(&outline(extra)).unwrap();
            events.push(llm(round, "course_design"));
            events.push(ev(
                round,
                "course_design",
                EventKind::PlanUpdated {
                    plan: next.clone(),
                    removed,
                    dropped_pool_keys: vec![],
                },
            ));
            plan = next;
        }
    }
    events.push(llm(12, "final_quiz"));
    events.push(reply(
        12,
        "final_quiz",
        SystemResponse::quiz(text("", 50), vec![item]),
        true,
    ));
    events.push(ev(
        12,
        "engine",
        EventKind::SessionFinished {
            reason: FinishReason::MaxRounds,
        },
    ));
    events
}
