//! Session engine for an LLM tutoring system: a meta agent routes each
//! learner message to an interaction tool, while backend reflection and
//! reaction keep the course plan, learning profile, quiz pool and
//! conversation memory up to date.

pub mod gateway;
pub mod memory;
pub mod orchestrator;
pub mod tools;
pub mod types;

pub use gateway::{Gateway, GatewayError};
pub use orchestrator::{EngineError, Event, EventKind, Session, SessionSpec, SessionState};
pub use tools::SystemResponse;
pub use types::{Difficulty, ToolTag, Variant};
