use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::plan::{CoursePlan, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizOption {
    pub label: String,
    pub text: String,
}

/// One multiple-choice question bound to an objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizItem {
    pub objective_id: NodeId,
    pub stem: String,
    pub options: Vec<QuizOption>,
    pub answer_key: String,
    pub source_round: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuizError {
    #[error("question stem is empty")]
    EmptyStem,
    #[error("a question needs 2 to 5 options, got {0}")]
    OptionCount(usize),
    #[error("option labels and texts must be non-empty and distinct")]
    DuplicateOption,
    #[error("answer key {0:?} does not name an option")]
    BadAnswerKey(String),
    #[error("unknown objective id {0:?}")]
    UnknownObjective(String),
}

impl QuizItem {
    pub fn new(
        objective_id: NodeId,
        stem: impl Into<String>,
        options: Vec<QuizOption>,
        answer_key: impl Into<String>,
        source_round: u32,
    ) -> Result<Self, QuizError> {
        let item = Self {
            objective_id,
            stem: stem.into().trim().to_string(),
            options,
            answer_key: answer_key.into().trim().to_string(),
            source_round,
        };
        item.validate()?;
        Ok(item)
    }

    pub fn validate(&self) -> Result<(), QuizError> {
        if self.stem.is_empty() {
            return Err(QuizError::EmptyStem);
        }
        if !(2..=5).contains(&self.options.len()) {
            return Err(QuizError::OptionCount(self.options.len()));
        }
        let mut labels = HashSet::new();
        let mut texts = HashSet::new();
        for o in &self.options {
            if o.label.trim().is_empty()
                || o.text.trim().is_empty()
                || !labels.insert(o.label.to_uppercase())
                || !texts.insert(o.text.trim().to_lowercase())
            {
                return Err(QuizError::DuplicateOption);
            }
        }
        if !self.options.iter().any(|o| o.label == self.answer_key) {
            return Err(QuizError::BadAnswerKey(self.answer_key.clone()));
        }
        Ok(())
    }

    /// Multi-line rendering with the question number, e.g.
    /// `1. stem` followed by indented `A. option` lines.
    pub fn render(&self, number: usize) -> String {
        let mut s = format!("{number}. {}", self.stem);
        for o in &self.options {
            s.push_str(&format!("\n   {}. {}", o.label, o.text));
        }
        s
    }
}

/// Objective id to generated questions, insertion-ordered per objective.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuizPool {
    entries: BTreeMap<NodeId, Vec<QuizItem>>,
}

impl QuizPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends validated items for an objective that exists in `plan`.
    pub fn append(
        &mut self,
        plan: &CoursePlan,
        id: &NodeId,
        items: Vec<QuizItem>,
    ) -> Result<(), QuizError> {
        if !plan.contains(id) {
            return Err(QuizError::UnknownObjective(id.to_string()));
        }
        for item in &items {
            item.validate()?;
        }
        self.entries.entry(id.clone()).or_default().extend(items);
        Ok(())
    }

    pub fn get(&self, id: &NodeId) -> &[QuizItem] {
        self.entries.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn is_keyed(&self, id: &NodeId) -> bool {
        self.entries.get(id).is_some_and(|v| !v.is_empty())
    }

    pub fn keys(&self) -> impl Iterator<Item = &NodeId> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Questions for `ids`, concatenated in plan pre-order regardless of the
    /// order of `ids`.
    pub fn quiz_for_objectives(
        &self,
        plan: &CoursePlan,
        ids: &[NodeId],
    ) -> Result<Vec<&QuizItem>, QuizError> {
        if let Some(missing) = ids.iter().find(|id| !plan.contains(id)) {
            return Err(QuizError::UnknownObjective(missing.to_string()));
        }
        let wanted: HashSet<&NodeId> = ids.iter().collect();
        Ok(plan
            .root
            .preorder()
            .filter(|n| wanted.contains(&n.id))
            .flat_map(|n| self.get(&n.id))
            .collect())
    }

    /// Drops entries whose objective is no longer in the plan. Returns the
    /// dropped ids.
    pub fn retain_plan_nodes(&mut self, plan: &CoursePlan) -> Vec<NodeId> {
        let dropped: Vec<NodeId> = self
            .entries
            .keys()
            .filter(|id| !plan.contains(id))
            .cloned()
            .collect();
        for id in &dropped {
            self.entries.remove(id);
        }
        dropped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::outline::OutlineNode;
    use crate::types::Difficulty;

    fn opt(label: &str, text: &str) -> QuizOption {
        QuizOption {
            label: label.into(),
            text: text.into(),
        }
    }

    fn item(obj: &NodeId, stem: &str) -> QuizItem {
        QuizItem::new(
            obj.clone(),
            stem,
            vec![opt("A", "yes"), opt("B", "no")],
            "A",
            1,
        )
        .unwrap()
    }

    /// A{B{D}, C}
    fn plan() -> (CoursePlan, NodeId, NodeId, NodeId) {
        let root = OutlineNode::new("A").with_children(vec![
            OutlineNode::new("B").with_children(vec![OutlineNode::new("D")]),
            OutlineNode::new("C"),
        ]);
        let plan = CoursePlan::from_outline(&root, Difficulty::new(1).unwrap()).unwrap();
        let ids: Vec<NodeId> = plan.root.preorder().map(|n| n.id.clone()).collect();
        (plan, ids[1].clone(), ids[2].clone(), ids[3].clone())
    }

    #[test]
    fn validation_rules() {
        let id = NodeId::new("n1");
        assert_eq!(
            QuizItem::new(id.clone(), "q", vec![opt("A", "x"), opt("B", "y")], "C", 1),
            Err(QuizError::BadAnswerKey("C".into()))
        );
        assert_eq!(
            QuizItem::new(id.clone(), "q", vec![opt("A", "x")], "A", 1),
            Err(QuizError::OptionCount(1))
        );
        assert_eq!(
            QuizItem::new(id.clone(), "q", vec![opt("A", "x"), opt("A", "y")], "A", 1),
            Err(QuizError::DuplicateOption)
        );
        assert_eq!(
            QuizItem::new(id, " ", vec![opt("A", "x"), opt("B", "y")], "A", 1),
            Err(QuizError::EmptyStem)
        );
    }

    #[test]
    fn concatenation_in_preorder() {
        let (plan, b, d, c) = plan();
        let mut pool = QuizPool::new();
        pool.append(&plan, &b, vec![item(&b, "q1")]).unwrap();
        pool.append(&plan, &d, vec![item(&d, "q2"), item(&d, "q3")])
            .unwrap();
        let stems = |ids: &[NodeId]| -> Vec<String> {
            pool.quiz_for_objectives(&plan, ids)
                .unwrap()
                .iter()
                .map(|q| q.stem.clone())
                .collect()
        };
        assert_eq!(stems(&[b.clone(), d.clone()]), vec!["q1", "q2", "q3"]);
        assert_eq!(stems(&[d.clone(), b.clone()]), vec!["q1", "q2", "q3"]);
        assert!(stems(&[c]).is_empty());
        assert!(matches!(
            pool.quiz_for_objectives(&plan, &[NodeId::new("zz")]),
            Err(QuizError::UnknownObjective(_))
        ));
    }

    #[test]
    fn append_requires_known_objective() {
        let (plan, b, ..) = plan();
        let mut pool = QuizPool::new();
        let ghost = NodeId::new("ghost");
        assert!(pool.append(&plan, &ghost, vec![item(&ghost, "q")]).is_err());
        pool.append(&plan, &b, vec![item(&b, "q1")]).unwrap();
        pool.append(&plan, &b, vec![item(&b, "q2")]).unwrap();
        let stems: Vec<&str> = pool.get(&b).iter().map(|q| q.stem.as_str()).collect();
        assert_eq!(stems, vec!["q1", "q2"]);
    }

    #[test]
    fn render_numbered() {
        let q = item(&NodeId::new("n1"), "Is it?");
        assert_eq!(q.render(2), "2. Is it?\n   A. yes\n   B. no");
    }
}
