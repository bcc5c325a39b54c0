//! HTTP host for tutoring sessions.
//!
//! Sessions are event-sourced: each round's events are appended to a JSONL
//! log and synced before the reply goes out, and startup replays every log.

pub mod api;
pub mod catalog;
pub mod config;
pub mod error;
pub mod store;

pub use api::{App, SessionSummary};
pub use config::ServiceConfig;
pub use error::{ApiError, ErrorBody};
pub use store::{EventStore, Quarantined};
