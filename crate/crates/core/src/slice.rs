//! Semantic slicing: extract the localized window around a target element
//! instead of shipping the whole hierarchy to the model.
//!
//! The window is the target's attributes, its direct children, its siblings'
//! texts, and the resource-id path from the root. The canonical serialized
//! rendering defines the legitimate quote universe the audit checks against.

use serde::{Deserialize, Serialize};

use crate::hierarchy::ViewNode;

/// Localized window around the target element.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemanticSlice {
    /// Detached copy of the target (children stripped; they live in
    /// `children`).
    pub target: SliceNode,
    /// Direct children of the target.
    pub children: Vec<SliceNode>,
    /// text / content-desc of the target's siblings, document order.
    pub neighbor_texts: Vec<String>,
    /// resource-ids on the root -> target path (target excluded).
    pub ancestor_ids: Vec<String>,
    /// Canonical text rendering of all of the above. One node per line:
    /// `depth-indent class [resource_id] text="…" desc="…" clickable=… bounds=[l,t][r,b]`,
    /// then a `neighbors:` and an `ancestors:` line. Deterministic, so
    /// prompt digests are stable. Attribute strings are embedded verbatim
    /// (no escaping): the audit matches quoted spans against this text.
    pub serialized: String,
}

/// Attribute snapshot of one node inside a slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceNode {
    pub class_name: String,
    pub resource_id: Option<String>,
    pub text: Option<String>,
    pub content_description: Option<String>,
    pub clickable: bool,
    pub bounds: String,
}

impl SliceNode {
    fn from_view(node: &ViewNode) -> Self {
        SliceNode {
            class_name: node.class_name.clone(),
            resource_id: node.resource_id.clone(),
            text: node.text.clone(),
            content_description: node.content_description.clone(),
            clickable: node.clickable,
            bounds: node.bounds.to_string(),
        }
    }

    fn render(&self, depth: usize) -> String {
        format!(
            "{}{} [{}] text=\"{}\" desc=\"{}\" clickable={} bounds={}",
            "  ".repeat(depth),
            self.class_name,
            self.resource_id.as_deref().unwrap_or(""),
            self.text.as_deref().unwrap_or(""),
            self.content_description.as_deref().unwrap_or(""),
            self.clickable,
            self.bounds,
        )
    }
}

/// Path from `root` to `target` by node identity, root first.
fn path_to<'a>(root: &'a ViewNode, target: &ViewNode) -> Option<Vec<&'a ViewNode>> {
    if std::ptr::eq(root, target) {
        return Some(vec![root]);
    }
    for child in &root.children {
        if let Some(mut path) = path_to(child, target) {
            path.insert(0, root);
            return Some(path);
        }
    }
    None
}

/// Build the semantic slice for `target`, which must be a node of `root`'s
/// tree (pass the reference returned by `locate_target`).
pub fn build_slice(root: &ViewNode, target: &ViewNode) -> SemanticSlice {
    let path = path_to(root, target).unwrap_or_default();
    debug_assert!(!path.is_empty(), "target is not in root's tree");

    let parent = path.len().checked_sub(2).map(|i| path[i]);
    let neighbor_texts: Vec<String> = parent
        .map(|p| {
            p.children
                .iter()
                .filter(|sibling| !std::ptr::eq(*sibling, target))
                .flat_map(|sibling| {
                    sibling
                        .text
                        .iter()
                        .chain(sibling.content_description.iter())
                        .cloned()
                })
                .collect()
        })
        .unwrap_or_default();

    let ancestor_ids: Vec<String> = path
        .iter()
        .take(path.len().saturating_sub(1))
        .filter_map(|node| node.resource_id.clone())
        .collect();

    let target_snapshot = SliceNode::from_view(target);
    let children: Vec<SliceNode> = target.children.iter().map(SliceNode::from_view).collect();

    let mut serialized = target_snapshot.render(0);
    for child in &children {
        serialized.push('\n');
        serialized.push_str(&child.render(1));
    }
    serialized.push('\n');
    if neighbor_texts.is_empty() {
        serialized.push_str("neighbors: (none)");
    } else {
        let quoted: Vec<String> = neighbor_texts.iter().map(|t| format!("\"{t}\"")).collect();
        serialized.push_str(&format!("neighbors: {}", quoted.join(", ")));
    }
    serialized.push('\n');
    if ancestor_ids.is_empty() {
        serialized.push_str("ancestors: (none)");
    } else {
        serialized.push_str(&format!("ancestors: {}", ancestor_ids.join(" > ")));
    }

    SemanticSlice {
        target: target_snapshot,
        children,
        neighbor_texts,
        ancestor_ids,
        serialized,
    }
}
