//! Session control flow: routing, reflection, reaction, scheduling and
//! termination, recorded as an event log.

pub mod events;
mod schedule;
mod session;
mod state;

pub use events::{from_jsonl, to_jsonl, Event, EventKind, FinishReason};
pub use schedule::Schedule;
pub use session::{EngineError, Session, SessionSpec, TurnOutcome};
pub use state::{Phase, ReplayError, SessionState, Turn};
