#![allow(dead_code)]

use std::sync::Arc;

use tutor_core::gateway::ScriptedProvider;
use tutor_core::orchestrator::{Event, EventKind};
use tutor_core::{Difficulty, Gateway, Session, SessionSpec, ToolTag, Variant};

pub const DIM: usize = 32;

/// Erosion { Weathering { Frost }, Transport, Deposition }: five objectives.
pub const OUTLINE: &str = "- Weathering\n  - Frost\n- Transport\n- Deposition";

pub const TWO_MCQ: &str = "```quiz\nSTEM: What splits rock?\nOPTION A: Frost\nOPTION B: Sun\nANSWER: A\n\nSTEM: Is ice weathering?\nOPTION A: Yes\nOPTION B: No\nANSWER: A\n```";

pub struct Rig {
    pub provider: Arc<ScriptedProvider>,
    pub gateway: Arc<Gateway>,
}

impl Rig {
    pub fn new() -> Self {
        let provider = Arc::new(ScriptedProvider::new());
        let gateway = Arc::new(Gateway::scripted(provider.clone(), DIM));
        Self { provider, gateway }
    }

    pub fn push(&self, tag: ToolTag, text: &str) -> &Self {
        self.provider.push(tag, text);
        self
    }

    pub fn push_n(&self, tag: ToolTag, text: &str, n: usize) -> &Self {
        for _ in 0..n {
            self.provider.push(tag, text);
        }
        self
    }

    /// Starts an "Erosion" session with [`OUTLINE`] and an opening lesson.
    pub fn start(&self, variant: Variant, level: i64) -> Session {
        self.push(ToolTag::CourseDesign, OUTLINE);
        self.push(ToolTag::Teach, "Opening lesson.");
        let spec = SessionSpec {
            session_id: "s1".into(),
            topic: "Erosion".into(),
            difficulty: Difficulty::new(level).unwrap(),
            variant,
        };
        Session::start(self.gateway.clone(), spec).unwrap().0
    }
}

pub fn count(events: &[Event], name: &str) -> usize {
    events.iter().filter(|e| e.name() == name).count()
}

pub fn rounds_of(events: &[Event], name: &str) -> Vec<u32> {
    events
        .iter()
        .filter(|e| e.name() == name)
        .map(|e| e.round)
        .collect()
}

pub fn by_actor<'a>(events: &'a [Event], actor: &str) -> Vec<&'a Event> {
    events.iter().filter(|e| e.actor == actor).collect()
}

pub fn prompts_for<'a>(events: &'a [Event], actor: &str) -> Vec<&'a str> {
    events
        .iter()
        .filter(|e| e.actor == actor)
        .filter_map(|e| match &e.kind {
            EventKind::LlmCall { prompt, .. } | EventKind::LlmFailed { prompt, .. } => {
                Some(prompt.as_str())
            }
            _ => None,
        })
        .collect()
}
