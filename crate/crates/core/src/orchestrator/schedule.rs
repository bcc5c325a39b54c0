use serde::{Deserialize, Serialize};

use crate::types::Difficulty;

/// Per-difficulty pacing: how often the learning profile is refreshed and
/// how many learner rounds a session may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub profile_interval: u32,
    pub max_rounds: u32,
}

const TABLE: [Schedule; 5] = [
    Schedule {
        profile_interval: 1,
        max_rounds: 10,
    },
    Schedule {
        profile_interval: 1,
        max_rounds: 15,
    },
    Schedule {
        profile_interval: 2,
        max_rounds: 20,
    },
    Schedule {
        profile_interval: 3,
        max_rounds: 25,
    },
    Schedule {
        profile_interval: 4,
        max_rounds: 30,
    },
];

impl Schedule {
    pub fn for_difficulty(d: Difficulty) -> Self {
        TABLE[usize::from(d.level()) - 1]
    }

    /// True when the profile (or, without reflection, the reaction tools)
    /// is due after `round`.
    pub fn is_due(&self, round: u32) -> bool {
        round > 0 && round.is_multiple_of(self.profile_interval)
    }
}
