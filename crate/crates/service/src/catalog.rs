//! Topic catalog: delimited text with the header `category,objective,difficulty`.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tutor_core::Difficulty;

/// The 80-topic catalog shipped with the service.
pub const BUNDLED: &str = include_str!("../data/topics.csv");

const HEADER: [&str; 3] = ["category", "objective", "difficulty"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub category: String,
    pub objective: String,
    pub difficulty: Difficulty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct CatalogError {
    pub line: u64,
    pub message: String,
}

/// Parses a catalog. An empty file is an empty catalog.
pub fn parse(text: &str) -> Result<Vec<TopicEntry>, CatalogError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let err = |line: u64, message: String| CatalogError { line, message };

    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?;
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != HEADER {
        return Err(err(
            1,
            format!(
                "expected header {}, found {}",
                HEADER.join(","),
                names.join(",")
            ),
        ));
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let objective = row[1].to_string();
        if objective.is_empty() {
            return Err(err(line, "objective is empty".into()));
        }
        let level: i64 = row[2]
            .parse()
            .map_err(|_| err(line, format!("difficulty {:?} is not a number", &row[2])))?;
        let difficulty = Difficulty::new(level).map_err(|e| err(line, e.to_string()))?;
        out.push(TopicEntry {
            category: row[0].to_string(),
            objective,
            difficulty,
        });
    }
    Ok(out)
}

/// Serializes entries back to catalog text.
pub fn render(entries: &[TopicEntry]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for e in entries {
        w.write_record([
            e.category.as_str(),
            e.objective.as_str(),
            &e.difficulty.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("catalog is utf-8")
}

/// Case-insensitive lookup by objective.
pub fn find<'a>(entries: &'a [TopicEntry], objective: &str) -> Option<&'a TopicEntry> {
    entries
        .iter()
        .find(|e| e.objective.eq_ignore_ascii_case(objective.trim()))
}
