//! Headless runner for scripted tutoring sessions, with learning-log
//! statistics and cross-variant comparison.

pub mod compare;
pub mod generate;
pub mod scenario;
pub mod stats;

pub use compare::{compare, CompareError, Comparison};
pub use generate::random_scenario;
pub use scenario::{run_scenario, write_artifacts, RunError, RunOutput, Scenario};
pub use stats::{compute_stats, stats_from_jsonl, RunStats, StatsError};
