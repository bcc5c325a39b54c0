use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    // Declaration order is the retrieval tie-break: learner before system.
    Learner,
    System,
}

/// One learner message and the system reply to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub index: u32,
    pub learner: String,
    pub system: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub round: u32,
    pub speaker: Speaker,
    pub text: String,
    pub vector: Embedding,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("round {got} appended after round {last}; rounds must be consecutive")]
    OutOfOrder { last: u32, got: u32 },
    #[error("embedding dim {got} does not match the session dim {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("malformed memory record on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

/// A retrieved record with its cosine similarity to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retrieved<'a> {
    pub record: &'a MemoryRecord,
    pub similarity: f64,
}

/// Ranking for retrieval: higher similarity first, then older round, then
/// learner before system. `Less` means "ranks earlier".
pub fn rank(a: (f64, &MemoryRecord), b: (f64, &MemoryRecord)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then(a.1.round.cmp(&b.1.round))
        .then(a.1.speaker.cmp(&b.1.speaker))
}

struct HeapEntry<'a>(f64, &'a MemoryRecord);

impl PartialEq for HeapEntry<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry<'_> {}
impl PartialOrd for HeapEntry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry<'_> {
    // Max-heap on "ranks later", so the heap top is the worst kept entry.
    fn cmp(&self, other: &Self) -> Ordering {
        rank((self.0, self.1), (other.0, other.1))
    }
}

/// Short-term buffer of recent rounds plus the embedded long-term store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningHistory {
    capacity: usize,
    short_term: VecDeque<Round>,
    long_term: Vec<MemoryRecord>,
    last_round: u32,
}

impl LearningHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "short-term capacity must be positive");
        Self {
            capacity,
            short_term: VecDeque::with_capacity(capacity + 1),
            long_term: Vec::new(),
            last_round: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn short_term(&self) -> impl ExactSizeIterator<Item = &Round> + DoubleEndedIterator {
        self.short_term.iter()
    }

    pub fn long_term(&self) -> &[MemoryRecord] {
        &self.long_term
    }

    pub fn last_round(&self) -> u32 {
        self.last_round
    }

    /// Records a round. `round` must follow the previous one; the oldest
    /// short-term round is evicted beyond capacity.
    pub fn append_round(
        &mut self,
        round: u32,
        learner: (String, Embedding),
        system: (String, Embedding),
    ) -> Result<(), HistoryError> {
        if round != self.last_round + 1 {
            return Err(HistoryError::OutOfOrder {
                last: self.last_round,
                got: round,
            });
        }
        let expected = self
            .long_term
            .first()
            .map_or(learner.1.dim(), |r| r.vector.dim());
        for v in [&learner.1, &system.1] {
            if v.dim() != expected {
                return Err(HistoryError::DimMismatch {
                    expected,
                    got: v.dim(),
                });
            }
        }
        self.short_term.push_back(Round {
            index: round,
            learner: learner.0.clone(),
            system: system.0.clone(),
        });
        while self.short_term.len() > self.capacity {
            self.short_term.pop_front();
        }
        self.long_term.push(MemoryRecord {
            round,
            speaker: Speaker::Learner,
            text: learner.0,
            vector: learner.1,
        });
        self.long_term.push(MemoryRecord {
            round,
            speaker: Speaker::System,
            text: system.0,
            vector: system.1,
        });
        self.last_round = round;
        Ok(())
    }

    /// The `k` records most similar to `query`, best first. Ties go to the
    /// older round, then to the learner's utterance.
    pub fn retrieve_relevant(&self, query: &Embedding, k: usize) -> Vec<Retrieved<'_>> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapEntry<'_>> = BinaryHeap::with_capacity(k + 1);
        for record in &self.long_term {
            let entry = HeapEntry(query.cosine(&record.vector), record);
            if heap.len() < k {
                heap.push(entry);
            } else if heap.peek().is_some_and(|worst| entry < *worst) {
                heap.pop();
                heap.push(entry);
            }
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|HeapEntry(similarity, record)| Retrieved { record, similarity })
            .collect()
    }

    /// Writes the long-term store as JSON lines.
    pub fn write_long_term_jsonl(&self, mut out: impl Write) -> Result<(), HistoryError> {
        for r in &self.long_term {
            let line = serde_json::to_string(r).map_err(|e| HistoryError::Io(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| HistoryError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn read_long_term_jsonl(input: impl BufRead) -> Result<Vec<MemoryRecord>, HistoryError> {
        let mut out = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| HistoryError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line).map_err(|e| HistoryError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })?,
            );
        }
        Ok(out)
    }

    #[cfg(test)]
    pub(crate) fn with_records(capacity: usize, records: Vec<MemoryRecord>) -> Self {
        let last_round = records.iter().map(|r| r.round).max().unwrap_or(0);
        Self {
            capacity,
            short_term: VecDeque::new(),
            long_term: records,
            last_round,
        }
    }
}
