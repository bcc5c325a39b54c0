//! Scripted learner runs: a scenario file fixes the learner's messages and
//! every completion the model would return.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tutor_core::gateway::{Script, ScriptedProvider};
use tutor_core::orchestrator::{to_jsonl, Phase, Schedule, Turn};
use tutor_core::{
    Difficulty, EngineError, Event, Gateway, Session, SessionSpec, SessionState, Variant,
};

use crate::stats::compute_stats;

/// Embedding width used for scenario runs.
pub const SCENARIO_DIM: usize = 64;

/// Consecutive retriable failures tolerated for one learner message.
const MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub topic: String,
    pub difficulty: Difficulty,
    pub variant: Variant,
    pub learner_script: Vec<String>,
    /// Completions per tool tag, consumed in order.
    pub provider_script: Script,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("round {round}: {source}")]
    Engine {
        round: u32,
        #[source]
        source: EngineError,
    },
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub events: Vec<Event>,
    pub state: SessionState,
    /// Learner messages actually sent; the script may outlast the session.
    pub messages_sent: usize,
}

impl RunOutput {
    pub fn transcript(&self) -> &[Turn] {
        &self.state.transcript
    }
}

impl Scenario {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let scenario: Scenario =
            serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.topic.trim().is_empty() {
            return Err(RunError::Invalid("topic is empty".into()));
        }
        let max = Schedule::for_difficulty(self.difficulty).max_rounds;
        if self.learner_script.len() > max as usize {
            return Err(RunError::Invalid(format!(
                "{} learner messages but level {} allows {max} rounds",
                self.learner_script.len(),
                self.difficulty
            )));
        }
        Ok(())
    }
}

/// Runs a scenario against a fresh scripted provider. Messages are sent in
/// order until the script ends or the session finishes. A retriable
/// failure resends the same message.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, RunError> {
    scenario.validate()?;
    let provider = Arc::new(ScriptedProvider::from_script(
        scenario.provider_script.clone(),
    ));
    let gateway = Arc::new(Gateway::scripted(provider, SCENARIO_DIM));
    let spec = SessionSpec {
        session_id: "scenario".into(),
        topic: scenario.topic.clone(),
        difficulty: scenario.difficulty,
        variant: scenario.variant,
    };
    let (mut session, _) =
        Session::start(gateway, spec).map_err(|source| RunError::Engine { round: 0, source })?;

    let mut sent = 0;
    for message in &scenario.learner_script {
        if session.state().phase == Phase::Finished {
            break;
        }
        let mut retries = 0;
        loop {
            let round = session.state().round + 1;
            match session.handle_user_message(message) {
                Ok(_) => break,
                Err(EngineError::Retriable(_)) if retries < MAX_RETRIES => retries += 1,
                Err(source) => return Err(RunError::Engine { round, source }),
            }
        }
        sent += 1;
    }
    let state = session.state().clone();
    Ok(RunOutput {
        events: session.into_events(),
        state,
        messages_sent: sent,
    })
}

/// Writes `events.jsonl`, `transcript.json` and `stats.json` into `dir`.
pub fn write_artifacts(dir: &Path, out: &RunOutput) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("events.jsonl"), to_jsonl(&out.events))?;
    std::fs::write(
        dir.join("transcript.json"),
        serde_json::to_string_pretty(out.transcript())?,
    )?;
    let stats = compute_stats(&out.events)?;
    std::fs::write(
        dir.join("stats.json"),
        serde_json::to_string_pretty(&stats)?,
    )?;
    Ok(())
}
