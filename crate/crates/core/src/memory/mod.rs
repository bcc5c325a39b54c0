//! Session memories: course plan, quiz pool, learning profile and learning
//! history. The current objective is derived from the plan.

pub mod history;
pub mod outline;
pub mod plan;
pub mod profile;
pub mod quiz;

pub use history::{HistoryError, LearningHistory, MemoryRecord, Retrieved, Round, Speaker};
pub use outline::{OutlineError, OutlineNode};
pub use plan::{
    normalize_title, CoursePlan, NodeId, ObjectiveNode, PlanError, RemovedNode, Status, MAX_DEPTH,
};
pub use profile::LearningProfile;
pub use quiz::{QuizError, QuizItem, QuizOption, QuizPool};
