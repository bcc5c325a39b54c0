//! Indented-outline text format for course plans.
//!
//! Rendering writes one objective per line, two spaces per level, a `- `
//! marker and a trailing `[done]` on completed objectives. Parsing is more
//! forgiving: it accepts `-`, `*`, `+`, numbered (`1.`, `1.2`), lettered
//! (`a.`) and roman (`iv.`) markers, tabs or spaces, and skips code fences
//! and unmarked prose lines when any marked line is present.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

const DONE_SUFFIX: &str = "[done]";

static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:[-*+\u{2022}]|\d+(?:\.\d+)*[.)]?|[A-Za-z][.)]|[ivxlcdmIVXLCDM]+[.)])\s+")
        .expect("valid regex")
});

/// A title tree without ids, as exchanged with the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutlineNode {
    pub title: String,
    pub completed: bool,
    pub children: Vec<OutlineNode>,
}

impl OutlineNode {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            completed: false,
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<OutlineNode>) -> Self {
        self.children = children;
        self
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(OutlineNode::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(OutlineNode::count).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutlineError {
    #[error("outline contains no objectives")]
    Empty,
    #[error("line {line}: objective title is empty")]
    EmptyTitle { line: usize },
}

pub fn render(forest: &[OutlineNode]) -> String {
    fn walk(node: &OutlineNode, level: usize, out: &mut String) {
        out.push_str(&"  ".repeat(level));
        out.push_str("- ");
        out.push_str(&node.title);
        if node.completed {
            out.push(' ');
            out.push_str(DONE_SUFFIX);
        }
        out.push('\n');
        for c in &node.children {
            walk(c, level + 1, out);
        }
    }
    let mut out = String::new();
    for n in forest {
        walk(n, 0, &mut out);
    }
    out
}

struct Line {
    number: usize,
    indent: usize,
    title: String,
    completed: bool,
}

fn indent_width(s: &str) -> usize {
    s.chars()
        .take_while(|c| c.is_whitespace())
        .map(|c| if c == '\t' { 4 } else { 1 })
        .sum()
}

/// Parses an outline into a forest of top-level nodes.
pub fn parse(text: &str) -> Result<Vec<OutlineNode>, OutlineError> {
    let mut lines = Vec::new();
    let mut any_marked = false;
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with("```") {
            continue;
        }
        let (marked, rest) = match MARKER.find(trimmed) {
            Some(m) => (true, &trimmed[m.end()..]),
            None => (false, trimmed),
        };
        any_marked |= marked;
        let mut title = rest.trim();
        let mut completed = false;
        if let Some(stripped) = title.strip_suffix(DONE_SUFFIX) {
            title = stripped.trim_end();
            completed = true;
        }
        lines.push((
            marked,
            Line {
                number: i + 1,
                indent: indent_width(raw),
                title: title.to_string(),
                completed,
            },
        ));
    }
    let lines: Vec<Line> = lines
        .into_iter()
        .filter(|(marked, _)| *marked || !any_marked)
        .map(|(_, l)| l)
        .collect();
    if lines.is_empty() {
        return Err(OutlineError::Empty);
    }
    if let Some(l) = lines.iter().find(|l| l.title.is_empty()) {
        return Err(OutlineError::EmptyTitle { line: l.number });
    }

    // Stack of (indent, path of child indices from the forest root).
    let mut forest: Vec<OutlineNode> = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    for line in lines {
        while stack
            .last()
            .is_some_and(|(indent, _)| *indent >= line.indent)
        {
            stack.pop();
        }
        let node = OutlineNode {
            title: line.title,
            completed: line.completed,
            children: Vec::new(),
        };
        let path = match stack.last() {
            None => {
                forest.push(node);
                vec![forest.len() - 1]
            }
            Some((_, parent_path)) => {
                let parent = node_at(&mut forest, parent_path);
                parent.children.push(node);
                let mut p = parent_path.clone();
                p.push(parent.children.len() - 1);
                p
            }
        };
        stack.push((line.indent, path));
    }
    Ok(forest)
}

fn node_at<'a>(forest: &'a mut [OutlineNode], path: &[usize]) -> &'a mut OutlineNode {
    let (first, rest) = path.split_first().expect("non-empty path");
    rest.iter()
        .fold(&mut forest[*first], |n, i| &mut n.children[*i])
}
