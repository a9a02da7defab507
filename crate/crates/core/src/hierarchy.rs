//! View-hierarchy tree: parse uiautomator `window_dump`-style XML and locate
//! the element a violation points at.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::geometry::{parse_bounds, Rect};

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("malformed hierarchy: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TargetError {
    #[error("no node in the hierarchy contains bounds {0}")]
    TargetNotFound(Rect),
}

/// One node of the rendered screen's element tree.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewNode {
    pub class_name: String,
    pub resource_id: Option<String>,
    pub text: Option<String>,
    pub content_description: Option<String>,
    pub clickable: bool,
    pub bounds: Rect,
    pub children: Vec<ViewNode>,
    /// Android permits drawing outside parent bounds; such nodes are kept
    /// and flagged instead of rejected.
    pub overflowing: bool,
}

/// UI-role nouns a report may use for an element without contradicting the
/// hierarchy. The table behind the visual-grounding audit:
///
/// | class contains | allowed roles                          |
/// |----------------|----------------------------------------|
/// | ImageButton    | button, image, icon                    |
/// | Button         | button                                 |
/// | CheckBox       | checkbox                               |
/// | EditText       | text field                             |
/// | ImageView      | image, icon                            |
/// | TextView       | label (+ link when clickable)          |
///
/// Any clickable node may additionally be called a "button".
pub fn allowed_roles_for(class_name: &str, clickable: bool) -> Vec<&'static str> {
    let class = class_name.to_lowercase();
    let mut roles: Vec<&'static str> = if class.contains("imagebutton") {
        vec!["button", "image", "icon"]
    } else if class.contains("checkbox") {
        vec!["checkbox"]
    } else if class.contains("button") {
        vec!["button"]
    } else if class.contains("edittext") {
        vec!["text field"]
    } else if class.contains("imageview") {
        vec!["image", "icon"]
    } else if class.contains("textview") {
        if clickable {
            vec!["label", "link"]
        } else {
            vec!["label"]
        }
    } else {
        vec![]
    };
    if clickable && !roles.contains(&"button") {
        roles.push("button");
    }
    roles
}

/// The noun narratives use for an element; always one of its
/// [`allowed_roles_for`] entries (or the vocabulary-neutral "element").
pub fn primary_role_for(class_name: &str, clickable: bool) -> &'static str {
    let class = class_name.to_lowercase();
    if class.contains("checkbox") {
        "checkbox"
    } else if class.contains("button") {
        "button"
    } else if class.contains("edittext") {
        "text field"
    } else if class.contains("imageview") {
        if clickable {
            "icon"
        } else {
            "image"
        }
    } else if class.contains("textview") {
        "label"
    } else if clickable {
        "button"
    } else {
        "element"
    }
}

impl ViewNode {
    pub fn allowed_roles(&self) -> Vec<&'static str> {
        allowed_roles_for(&self.class_name, self.clickable)
    }

    pub fn primary_role(&self) -> &'static str {
        primary_role_for(&self.class_name, self.clickable)
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a ViewNode)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

fn attr_string(start: &BytesStart, name: &[u8]) -> Result<Option<String>, HierarchyError> {
    for attr in start.attributes() {
        let attr = attr.map_err(|e| HierarchyError::Malformed(e.to_string()))?;
        if attr.key.as_ref() == name {
            let value = attr
                .unescape_value()
                .map_err(|e| HierarchyError::Malformed(e.to_string()))?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

fn node_from_start(start: &BytesStart) -> Result<ViewNode, HierarchyError> {
    let bounds_text = attr_string(start, b"bounds")?
        .ok_or_else(|| HierarchyError::Malformed("node missing bounds attribute".to_string()))?;
    let bounds = parse_bounds(&bounds_text)
        .map_err(|e| HierarchyError::Malformed(format!("bad bounds attribute: {e}")))?;
    let non_empty = |v: Option<String>| v.filter(|s| !s.is_empty());
    Ok(ViewNode {
        class_name: attr_string(start, b"class")?.unwrap_or_default(),
        resource_id: non_empty(attr_string(start, b"resource-id")?),
        text: non_empty(attr_string(start, b"text")?),
        content_description: non_empty(attr_string(start, b"content-desc")?),
        clickable: attr_string(start, b"clickable")?.as_deref() == Some("true"),
        bounds,
        children: Vec::new(),
        overflowing: false,
    })
}

/// Parse a uiautomator-style XML dump into a single-rooted tree.
///
/// `<node>` elements carry class / resource-id / text / content-desc /
/// clickable / bounds attributes; an enclosing `<hierarchy>` element is
/// accepted and skipped. Missing bounds, XML errors, and multiple roots are
/// all `MalformedHierarchy`.
pub fn parse_view_hierarchy(doc: &str) -> Result<ViewNode, HierarchyError> {
    let mut reader = Reader::from_str(doc);
    reader.config_mut().trim_text(true);

    let mut stack: Vec<ViewNode> = Vec::new();
    let mut roots: Vec<ViewNode> = Vec::new();
    let mut buf = Vec::new();

    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(start)) => {
                if start.name().as_ref() == b"hierarchy" {
                    // wrapper element; children become root candidates
                } else {
                    stack.push(node_from_start(&start)?);
                }
            }
            Ok(Event::Empty(start)) => {
                if start.name().as_ref() != b"hierarchy" {
                    let node = node_from_start(&start)?;
                    attach(node, &mut stack, &mut roots);
                }
            }
            Ok(Event::End(end)) => {
                if end.name().as_ref() != b"hierarchy" {
                    let node = stack.pop().ok_or_else(|| {
                        HierarchyError::Malformed("unbalanced end tag".to_string())
                    })?;
                    attach(node, &mut stack, &mut roots);
                }
            }
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => return Err(HierarchyError::Malformed(e.to_string())),
        }
        buf.clear();
    }

    if !stack.is_empty() {
        return Err(HierarchyError::Malformed(
            "unclosed node element".to_string(),
        ));
    }
    match roots.len() {
        0 => Err(HierarchyError::Malformed("no root node".to_string())),
        1 => Ok(roots.pop().unwrap()),
        n => Err(HierarchyError::Malformed(format!("multiple roots ({n})"))),
    }
}

fn attach(mut node: ViewNode, stack: &mut [ViewNode], roots: &mut Vec<ViewNode>) {
    match stack.last_mut() {
        Some(parent) => {
            node.overflowing = !parent.bounds.contains(&node.bounds);
            parent.children.push(node);
        }
        None => roots.push(node),
    }
}

/// How a target was matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Exact,
    SmallestContainer,
}

/// Locate the node a violation's bounds point at: exact bounds match first
/// (first in pre-order wins), otherwise the smallest-area node containing
/// the rect, ties broken by document order.
pub fn locate_target<'a>(root: &'a ViewNode, bounds: &Rect) -> Result<&'a ViewNode, TargetError> {
    locate_target_with_kind(root, bounds).map(|(node, _)| node)
}

pub fn locate_target_with_kind<'a>(
    root: &'a ViewNode,
    bounds: &Rect,
) -> Result<(&'a ViewNode, MatchKind), TargetError> {
    let mut exact: Option<&ViewNode> = None;
    let mut best: Option<&ViewNode> = None;
    root.walk(&mut |node| {
        if node.bounds == *bounds && exact.is_none() {
            exact = Some(node);
        }
        if node.bounds.contains(bounds) {
            let better = match best {
                Some(b) => node.bounds.area() < b.bounds.area(),
                None => true,
            };
            if better {
                best = Some(node);
            }
        }
    });
    if let Some(node) = exact {
        return Ok((node, MatchKind::Exact));
    }
    best.map(|node| (node, MatchKind::SmallestContainer))
        .ok_or(TargetError::TargetNotFound(*bounds))
}
