//! Tree-structured course plan with per-objective completion status.
//!
//! The plan is rooted at the main learning objective (depth 1) and is at
//! most [`MAX_DEPTH`] layers deep. The current objective is never stored:
//! it is always derived as the first pending node in depth-first pre-order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::outline::OutlineNode;
use crate::types::Difficulty;

pub const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveNode {
    pub id: NodeId,
    pub title: String,
    pub status: Status,
    #[serde(default)]
    pub children: Vec<ObjectiveNode>,
}

impl ObjectiveNode {
    pub fn is_completed(&self) -> bool {
        self.status == Status::Completed
    }

    /// Number of layers, counting this node as 1.
    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ObjectiveNode::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ObjectiveNode::count)
            .sum::<usize>()
    }

    /// Depth-first pre-order walk: parent first, children in stored order.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }

    /// Pre-order walk that also yields each node's depth (root = 1).
    pub fn preorder_with_depth(&self) -> impl Iterator<Item = (&ObjectiveNode, usize)> {
        let mut stack = vec![(self, 1usize)];
        std::iter::from_fn(move || {
            let (node, depth) = stack.pop()?;
            stack.extend(node.children.iter().rev().map(|c| (c, depth + 1)));
            Some((node, depth))
        })
    }

    fn find_mut(&mut self, id: &NodeId) -> Option<&mut ObjectiveNode> {
        if &self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }
}

/// Explicit-stack pre-order cursor over a plan tree.
pub struct Preorder<'a> {
    stack: Vec<&'a ObjectiveNode>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a ObjectiveNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("plan is {depth} layers deep, at most {MAX_DEPTH} are allowed")]
    TooDeep { depth: usize },
    #[error("proposed plan is empty")]
    Empty,
    #[error("objective titles must be non-empty")]
    EmptyTitle,
    #[error("sibling objectives share the title {0:?}")]
    DuplicateSibling(String),
    #[error("unknown objective id {0:?}")]
    UnknownNode(String),
    #[error("duplicate objective id {0:?}")]
    DuplicateId(String),
}

/// Case-folded, whitespace-collapsed title used for path matching.
pub fn normalize_title(title: &str) -> String {
    title
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn validate_outline(root: &OutlineNode) -> Result<(), PlanError> {
    let depth = root.depth();
    if depth > MAX_DEPTH {
        return Err(PlanError::TooDeep { depth });
    }
    fn walk(node: &OutlineNode) -> Result<(), PlanError> {
        if node.title.trim().is_empty() {
            return Err(PlanError::EmptyTitle);
        }
        let mut seen = HashSet::new();
        for child in &node.children {
            if !seen.insert(normalize_title(&child.title)) {
                return Err(PlanError::DuplicateSibling(child.title.clone()));
            }
            walk(child)?;
        }
        Ok(())
    }
    walk(root)
}

/// A node dropped by a plan update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedNode {
    pub id: NodeId,
    pub title: String,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoursePlan {
    pub root: ObjectiveNode,
    pub revision: u32,
    pub difficulty: Difficulty,
    next_id: u32,
}

impl CoursePlan {
    /// Builds a plan from an outline. Outline statuses are kept; ids are
    /// assigned in pre-order.
    pub fn from_outline(root: &OutlineNode, difficulty: Difficulty) -> Result<Self, PlanError> {
        validate_outline(root)?;
        let mut next_id = 0;
        let root = Self::build_fresh(root, &mut next_id);
        Ok(Self {
            root,
            revision: 0,
            difficulty,
            next_id,
        })
    }

    fn build_fresh(node: &OutlineNode, next_id: &mut u32) -> ObjectiveNode {
        *next_id += 1;
        let id = NodeId(format!("n{next_id}"));
        ObjectiveNode {
            id,
            title: node.title.trim().to_string(),
            status: if node.completed {
                Status::Completed
            } else {
                Status::Pending
            },
            children: node
                .children
                .iter()
                .map(|c| Self::build_fresh(c, next_id))
                .collect(),
        }
    }

    /// Checks every structural invariant of a stored plan.
    pub fn validate(&self) -> Result<(), PlanError> {
        let depth = self.root.depth();
        if depth > MAX_DEPTH {
            return Err(PlanError::TooDeep { depth });
        }
        let mut ids = HashSet::new();
        for node in self.root.preorder() {
            if node.title.trim().is_empty() {
                return Err(PlanError::EmptyTitle);
            }
            if !ids.insert(&node.id) {
                return Err(PlanError::DuplicateId(node.id.0.clone()));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn get(&self, id: &NodeId) -> Option<&ObjectiveNode> {
        self.root.preorder().find(|n| &n.id == id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.get(id).is_some()
    }

    /// First pending node in depth-first pre-order, or `None` when every
    /// objective is completed.
    pub fn next_uncompleted(&self) -> Option<&ObjectiveNode> {
        self.root.preorder().find(|n| !n.is_completed())
    }

    pub fn all_completed(&self) -> bool {
        self.next_uncompleted().is_none()
    }

    /// Completed nodes in pre-order.
    pub fn completed(&self) -> impl Iterator<Item = &ObjectiveNode> {
        self.root.preorder().filter(|n| n.is_completed())
    }

    /// Marks a node completed. Idempotent; nothing else changes.
    pub fn mark_completed(&mut self, id: &NodeId) -> Result<(), PlanError> {
        let node = self
            .root
            .find_mut(id)
            .ok_or_else(|| PlanError::UnknownNode(id.0.clone()))?;
        node.status = Status::Completed;
        Ok(())
    }

    /// Adopts the structure of `proposed`. Nodes whose normalized title path
    /// from the root matches an existing node keep its id and status; new
    /// nodes are pending with fresh ids. Revision advances by one. Returns
    /// the nodes that no longer appear.
    pub fn apply_update(&mut self, proposed: &OutlineNode) -> Result<Vec<RemovedNode>, PlanError> {
        validate_outline(proposed)?;
        let existing: HashMap<Vec<String>, (NodeId, Status)> = self
            .title_paths()
            .into_iter()
            .map(|(path, node)| (path, (node.id.clone(), node.status)))
            .collect();

        let mut path: Vec<String> = Vec::new();
        let mut next_id = self.next_id;
        let root = Self::build_with_paths(proposed, &mut path, &mut next_id, &existing);

        let kept: HashSet<&NodeId> = root.preorder().map(|n| &n.id).collect();
        let removed = self
            .root
            .preorder()
            .filter(|n| !kept.contains(&n.id))
            .map(|n| RemovedNode {
                id: n.id.clone(),
                title: n.title.clone(),
                status: n.status,
            })
            .collect();

        self.root = root;
        self.next_id = next_id;
        self.revision += 1;
        Ok(removed)
    }

    fn build_with_paths(
        node: &OutlineNode,
        path: &mut Vec<String>,
        next_id: &mut u32,
        existing: &HashMap<Vec<String>, (NodeId, Status)>,
    ) -> ObjectiveNode {
        path.push(normalize_title(&node.title));
        let (id, status) = existing.get(path.as_slice()).cloned().unwrap_or_else(|| {
            *next_id += 1;
            (NodeId(format!("n{next_id}")), Status::Pending)
        });
        let children = node
            .children
            .iter()
            .map(|c| Self::build_with_paths(c, path, next_id, existing))
            .collect();
        path.pop();
        ObjectiveNode {
            id,
            title: node.title.trim().to_string(),
            status,
            children,
        }
    }

    /// Every node keyed by its normalized title path from the root.
    pub fn title_paths(&self) -> Vec<(Vec<String>, &ObjectiveNode)> {
        fn walk<'a>(
            node: &'a ObjectiveNode,
            path: &mut Vec<String>,
            out: &mut Vec<(Vec<String>, &'a ObjectiveNode)>,
        ) {
            path.push(normalize_title(&node.title));
            out.push((path.clone(), node));
            for c in &node.children {
                walk(c, path, out);
            }
            path.pop();
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// The plan as an outline tree (statuses included, ids dropped).
    pub fn to_outline(&self) -> OutlineNode {
        fn conv(n: &ObjectiveNode) -> OutlineNode {
            OutlineNode {
                title: n.title.clone(),
                completed: n.is_completed(),
                children: n.children.iter().map(conv).collect(),
            }
        }
        conv(&self.root)
    }

    /// Indented outline used in prompts; completed nodes carry `[done]`.
    pub fn render_outline(&self) -> String {
        super::outline::render(std::slice::from_ref(&self.to_outline()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(level: i64) -> Difficulty {
        Difficulty::new(level).unwrap()
    }

    fn leaf(title: &str) -> OutlineNode {
        OutlineNode::new(title)
    }

    fn node(title: &str, children: Vec<OutlineNode>) -> OutlineNode {
        OutlineNode::new(title).with_children(children)
    }

    /// A(completed){B(completed){D(pending)}, C(pending)}
    fn four_node() -> CoursePlan {
        let mut plan = CoursePlan::from_outline(
            &node("A", vec![node("B", vec![leaf("D")]), leaf("C")]),
            d(1),
        )
        .unwrap();
        let ids: Vec<NodeId> = plan.root.preorder().map(|n| n.id.clone()).collect();
        plan.mark_completed(&ids[0]).unwrap();
        plan.mark_completed(&ids[1]).unwrap();
        plan
    }

    fn title_of(plan: &CoursePlan) -> Option<&str> {
        plan.next_uncompleted().map(|n| n.title.as_str())
    }

    #[test]
    fn root_first_when_all_pending() {
        let plan = CoursePlan::from_outline(&node("A", vec![leaf("B"), leaf("C")]), d(1)).unwrap();
        assert_eq!(title_of(&plan), Some("A"));
    }

    #[test]
    fn cursor_descends_before_siblings() {
        let mut plan = four_node();
        assert_eq!(title_of(&plan), Some("D"));
        let d_id = plan.next_uncompleted().unwrap().id.clone();
        plan.mark_completed(&d_id).unwrap();
        assert_eq!(title_of(&plan), Some("C"));
        let c_id = plan.next_uncompleted().unwrap().id.clone();
        plan.mark_completed(&c_id).unwrap();
        assert_eq!(title_of(&plan), None);
        assert!(plan.all_completed());
    }

    #[test]
    fn mark_completed_is_idempotent_and_checks_id() {
        let mut plan = four_node();
        let before = plan.clone();
        let b = plan.root.children[0].id.clone();
        plan.mark_completed(&b).unwrap();
        assert_eq!(plan, before);
        assert_eq!(
            plan.mark_completed(&NodeId::new("zz")),
            Err(PlanError::UnknownNode("zz".into()))
        );
    }

    #[test]
    fn identity_update_keeps_ids_and_statuses() {
        let mut plan = four_node();
        let before = plan.clone();
        let removed = plan.apply_update(&before.to_outline()).unwrap();
        assert!(removed.is_empty());
        assert_eq!(plan.root, before.root);
        assert_eq!(plan.revision, before.revision + 1);
    }

    #[test]
    fn update_adds_pending_node_and_keeps_completed() {
        let mut plan =
            CoursePlan::from_outline(&node("A", vec![leaf("B"), leaf("C")]), d(2)).unwrap();
        let b = plan.root.children[0].id.clone();
        plan.mark_completed(&b).unwrap();
        // Title matching is case- and whitespace-insensitive.
        plan.apply_update(&node("A", vec![leaf("  b "), leaf("C"), leaf("E")]))
            .unwrap();
        let titles: Vec<(&str, Status)> = plan
            .root
            .children
            .iter()
            .map(|n| (n.title.as_str(), n.status))
            .collect();
        assert_eq!(
            titles,
            vec![
                ("b", Status::Completed),
                ("C", Status::Pending),
                ("E", Status::Pending)
            ]
        );
        assert_eq!(plan.root.children[0].id, b);
        assert_eq!(plan.node_count(), 4);
        plan.validate().unwrap();
    }

    #[test]
    fn update_reports_removed_nodes() {
        let mut plan = four_node();
        let removed = plan.apply_update(&node("A", vec![leaf("C")])).unwrap();
        let titles: Vec<&str> = removed.iter().map(|r| r.title.as_str()).collect();
        assert_eq!(titles, vec!["B", "D"]);
        assert_eq!(removed[0].status, Status::Completed);
    }

    #[test]
    fn four_layers_rejected() {
        let deep = node("A", vec![node("B", vec![node("C", vec![leaf("D")])])]);
        assert_eq!(
            CoursePlan::from_outline(&deep, d(1)),
            Err(PlanError::TooDeep { depth: 4 })
        );
        let mut plan = four_node();
        let before = plan.clone();
        assert_eq!(
            plan.apply_update(&deep),
            Err(PlanError::TooDeep { depth: 4 })
        );
        assert_eq!(plan, before);
    }

    #[test]
    fn duplicate_siblings_and_empty_titles_rejected() {
        assert!(matches!(
            CoursePlan::from_outline(&node("A", vec![leaf("B"), leaf("b")]), d(1)),
            Err(PlanError::DuplicateSibling(_))
        ));
        assert_eq!(
            CoursePlan::from_outline(&node("A", vec![leaf(" ")]), d(1)),
            Err(PlanError::EmptyTitle)
        );
    }

    #[test]
    fn fresh_ids_never_collide_after_updates() {
        let mut plan = four_node();
        plan.apply_update(&node("A", vec![leaf("X")])).unwrap();
        plan.apply_update(&node(
            "A",
            vec![leaf("X"), leaf("Y"), node("Z", vec![leaf("W")])],
        ))
        .unwrap();
        plan.validate().unwrap();
        assert_eq!(plan.revision, 2);
    }

    #[test]
    fn json_shape() {
        let plan = CoursePlan::from_outline(&node("A", vec![leaf("B")]), d(1)).unwrap();
        let v = serde_json::to_value(&plan.root).unwrap();
        assert_eq!(v["id"], "n1");
        assert_eq!(v["title"], "A");
        assert_eq!(v["status"], "pending");
        assert_eq!(v["children"][0]["id"], "n2");
    }
}
