//! Side-by-side comparison of runs over the same topic.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::stats::RunStats;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("need at least two runs, got {0}")]
    TooFew(usize),
    #[error("runs cover different topics: {0:?} and {1:?}")]
    TopicMismatch(String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub text: String,
    /// Numeric value used for deltas; lists use their mean.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub statistic: String,
    pub cells: Vec<Cell>,
}

/// One column per run plus one delta column per run after the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

fn num(v: f64) -> Cell {
    Cell {
        text: format_num(v),
        value: Some(v),
    }
}

fn format_num(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn list(v: &[u32]) -> Cell {
    let text = if v.is_empty() {
        "-".to_string()
    } else {
        v.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
    };
    let value = (!v.is_empty()).then(|| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64);
    Cell { text, value }
}

/// Column label for a run: its variant, with a numeric suffix when the
/// same variant appears more than once.
fn labels(runs: &[RunStats]) -> Vec<String> {
    runs.iter()
        .enumerate()
        .map(|(i, r)| {
            let name = r.variant.as_str();
            let dupes = runs.iter().filter(|o| o.variant == r.variant).count();
            if dupes > 1 {
                format!("{name}#{}", i + 1)
            } else {
                name.to_string()
            }
        })
        .collect()
}

pub fn compare(runs: &[RunStats]) -> Result<Comparison, CompareError> {
    if runs.len() < 2 {
        return Err(CompareError::TooFew(runs.len()));
    }
    for r in &runs[1..] {
        if r.topic != runs[0].topic {
            return Err(CompareError::TopicMismatch(
                runs[0].topic.clone(),
                r.topic.clone(),
            ));
        }
    }

    let mut rows: Vec<(String, Vec<Cell>)> = vec![
        (
            "rounds".into(),
            runs.iter().map(|r| num(r.rounds as f64)).collect(),
        ),
        (
            "avg_response_length".into(),
            runs.iter().map(|r| num(r.avg_response_length)).collect(),
        ),
        (
            "proxy_objectives".into(),
            runs.iter().map(|r| num(r.proxy_objectives)).collect(),
        ),
        (
            "plan_complexity".into(),
            runs.iter().map(|r| num(r.plan_complexity as f64)).collect(),
        ),
        (
            "plan_updates".into(),
            runs.iter().map(|r| num(r.plan_updates as f64)).collect(),
        ),
        (
            "plan_update_intervals".into(),
            runs.iter()
                .map(|r| list(&r.plan_update_intervals))
                .collect(),
        ),
        (
            "quizzes".into(),
            runs.iter().map(|r| num(r.quizzes as f64)).collect(),
        ),
        (
            "quiz_intervals".into(),
            runs.iter().map(|r| list(&r.quiz_intervals)).collect(),
        ),
    ];
    let kinds: BTreeSet<&String> = runs.iter().flat_map(|r| r.response_kinds.keys()).collect();
    for k in kinds {
        rows.push((
            format!("responses.{k}"),
            runs.iter()
                .map(|r| num(*r.response_kinds.get(k).unwrap_or(&0) as f64))
                .collect(),
        ));
    }
    let tools: BTreeSet<&String> = runs.iter().flat_map(|r| r.tool_calls.keys()).collect();
    for t in tools {
        rows.push((
            format!("calls.{t}"),
            runs.iter()
                .map(|r| num(*r.tool_calls.get(t).unwrap_or(&0) as f64))
                .collect(),
        ));
    }

    let names = labels(runs);
    let mut columns = names.clone();
    columns.extend(names[1..].iter().map(|n| format!("delta {n}")));
    let rows = rows
        .into_iter()
        .map(|(statistic, mut cells)| {
            let base = cells[0].value;
            let deltas: Vec<Cell> = cells[1..]
                .iter()
                .map(|c| match (base, c.value) {
                    (Some(a), Some(b)) => {
                        let d = b - a;
                        Cell {
                            text: if d > 0.0 {
                                format!("+{}", format_num(d))
                            } else {
                                format_num(d)
                            },
                            value: Some(d),
                        }
                    }
                    _ => Cell {
                        text: "n/a".into(),
                        value: None,
                    },
                })
                .collect();
            cells.extend(deltas);
            Row { statistic, cells }
        })
        .collect();
    Ok(Comparison { columns, rows })
}

impl Comparison {
    /// Fixed-width text table.
    pub fn to_text(&self) -> String {
        let mut header = vec!["statistic".to_string()];
        header.extend(self.columns.iter().cloned());
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut line = vec![r.statistic.clone()];
                line.extend(r.cells.iter().map(|c| c.text.clone()));
                line
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                std::iter::once(&header)
                    .chain(&body)
                    .map(|l| l[i].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let fmt = |line: &[String]| {
            line.iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (s, w))| {
                    if i == 0 {
                        format!("{s:<w$}")
                    } else {
                        format!("{s:>w$}")
                    }
                })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = fmt(&header);
        out.push('\n');
        for line in &body {
            out.push_str(&fmt(line));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["statistic".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut line = vec![r.statistic.clone()];
            line.extend(r.cells.iter().map(|c| c.text.clone()));
            w.write_record(&line).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}
