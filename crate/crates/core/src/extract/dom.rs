//! Arena DOM with stable pre-order node ids.
//!
//! Only element and non-blank text nodes are kept; comments, doctypes and
//! whitespace-only text are dropped. The `<html>` element is node 0.

use std::collections::{BTreeMap, HashMap};

use ego_tree::{NodeId as TreeId, NodeRef};
use scraper::{Html, Node as HtmlNode, Selector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeData {
    Element { tag: String, attrs: BTreeMap<String, String> },
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub data: NodeData,
}

/// One step of a root-to-node path: tag, index among element siblings, and
/// the sorted class list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathSeg {
    pub tag: String,
    pub index: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dom {
    nodes: Vec<Node>,
}

struct Parsed {
    dom: Dom,
    tree_ids: Vec<TreeId>,
}

fn build(html: &Html) -> Parsed {
    let mut dom = Dom::default();
    let mut tree_ids = Vec::new();
    let root = html.root_element();
    let mut stack: Vec<(NodeRef<'_, HtmlNode>, Option<usize>)> = vec![(*root, None)];
    while let Some((node, parent)) = stack.pop() {
        let data = match node.value() {
            HtmlNode::Element(e) => NodeData::Element {
                tag: e.name().to_ascii_lowercase(),
                attrs: e.attrs().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            },
            HtmlNode::Text(t) if !t.trim().is_empty() => NodeData::Text(t.to_string()),
            _ => continue,
        };
        let id = dom.nodes.len();
        dom.nodes.push(Node { parent, children: Vec::new(), data });
        tree_ids.push(node.id());
        if let Some(p) = parent {
            dom.nodes[p].children.push(id);
        }
        let children: Vec<_> = node.children().collect();
        for child in children.into_iter().rev() {
            stack.push((child, Some(id)));
        }
    }
    Parsed { dom, tree_ids }
}

impl Dom {
    pub fn parse(html: &str) -> Dom {
        build(&Html::parse_document(html)).dom
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn tag(&self, id: usize) -> Option<&str> {
        match &self.nodes.get(id)?.data {
            NodeData::Element { tag, .. } => Some(tag),
            NodeData::Text(_) => None,
        }
    }

    pub fn attr(&self, id: usize, name: &str) -> Option<&str> {
        match &self.nodes.get(id)?.data {
            NodeData::Element { attrs, .. } => attrs.get(name).map(String::as_str),
            NodeData::Text(_) => None,
        }
    }

    pub fn classes(&self, id: usize) -> Vec<String> {
        let mut classes: Vec<String> = self.attr(id, "class").unwrap_or("").split_whitespace().map(str::to_string).collect();
        classes.sort();
        classes.dedup();
        classes
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes.get(id)?.parent
    }

    pub fn element_children(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes[id].children.iter().copied().filter(|&c| self.tag(c).is_some())
    }

    /// Whitespace-collapsed text content of a subtree.
    pub fn text_content(&self, id: usize) -> String {
        let mut parts = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match &self.nodes[n].data {
                NodeData::Text(t) => parts.push(t.as_str()),
                NodeData::Element { .. } => stack.extend(self.nodes[n].children.iter().rev()),
            }
        }
        parts.join(" ").split_whitespace().collect::<Vec<_>>().join(" ")
    }

    /// Text of the node's own text children only.
    pub fn own_text(&self, id: usize) -> String {
        let parts: Vec<&str> = self.nodes[id]
            .children
            .iter()
            .filter_map(|&c| match &self.nodes[c].data {
                NodeData::Text(t) => Some(t.as_str()),
                _ => None,
            })
            .collect();
        parts.join(" ").split_whitespace().collect::<Vec<_>>().join(" ")
    }

    pub fn depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            d += 1;
            cur = p;
        }
        d
    }

    pub fn ancestors(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    pub fn is_ancestor_or_self(&self, ancestor: usize, id: usize) -> bool {
        id == ancestor || self.ancestors(id).contains(&ancestor)
    }

    /// Deepest common ancestor (or self) of a non-empty node set.
    pub fn common_ancestor(&self, ids: &[usize]) -> Option<usize> {
        let (&first, rest) = ids.split_first()?;
        let mut chain: Vec<usize> = std::iter::once(first).chain(self.ancestors(first)).collect();
        for &id in rest {
            chain.retain(|&a| self.is_ancestor_or_self(a, id));
        }
        chain.first().copied()
    }

    /// Root-to-node path over elements. Text nodes take their parent's path.
    pub fn dom_path(&self, id: usize) -> Vec<PathSeg> {
        let mut id = id;
        if self.tag(id).is_none() {
            id = self.nodes[id].parent.unwrap_or(0);
        }
        let mut segs = Vec::new();
        let mut cur = Some(id);
        while let Some(n) = cur {
            let parent = self.nodes[n].parent;
            let index = parent.map_or(0, |p| self.element_children(p).position(|c| c == n).unwrap_or(0));
            segs.push(PathSeg { tag: self.tag(n).unwrap_or_default().to_string(), index, classes: self.classes(n) });
            cur = parent;
        }
        segs.reverse();
        segs
    }

    /// Follows a path from the root; tags and classes must agree at every step.
    pub fn replay_path(&self, path: &[PathSeg]) -> Option<usize> {
        let (first, rest) = path.split_first()?;
        if self.is_empty() || self.tag(0)? != first.tag {
            return None;
        }
        let mut cur = 0;
        for seg in rest {
            let child = self.element_children(cur).nth(seg.index)?;
            if self.tag(child)? != seg.tag || self.classes(child) != seg.classes {
                return None;
            }
            cur = child;
        }
        Some(cur)
    }

    /// Pre-order descendants of `id`, excluding `id` itself.
    pub fn descendants(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.nodes[id].children.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    pub fn element_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.data, NodeData::Element { .. })).count()
    }
}

/// CSS selection over a document, reported as arena node ids in document
/// order. With `scope`, only descendants of that node are considered.
pub fn css_select(html: &str, css: &str, scope: Option<usize>) -> Result<Vec<usize>, String> {
    let selector = Selector::parse(css).map_err(|e| format!("bad CSS selector {css:?}: {e}"))?;
    let doc = Html::parse_document(html);
    let parsed = build(&doc);
    let index: HashMap<TreeId, usize> = parsed.tree_ids.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut out: Vec<usize> = match scope {
        None => doc.select(&selector).filter_map(|e| index.get(&e.id()).copied()).collect(),
        Some(s) => {
            let tree_id = *parsed.tree_ids.get(s).ok_or_else(|| format!("unknown node {s}"))?;
            let scope_ref = doc.tree.get(tree_id).and_then(scraper::ElementRef::wrap).ok_or_else(|| format!("node {s} is not an element"))?;
            scope_ref.select(&selector).filter_map(|e| index.get(&e.id()).copied()).filter(|&n| n != s).collect()
        }
    };
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = "<!DOCTYPE html><html><head><title>t</title></head><body>\
        <!-- note --><ul class=\"list\"><li class=\"item\"><span>  Sony\n A7 </span></li>\
        <li class=\"item\"><img src=\"cam.jpg\"></li></ul></body></html>";

    #[test]
    fn preorder_ids_and_pruning() {
        let dom = Dom::parse(PAGE);
        let tags: Vec<Option<&str>> = (0..dom.len()).map(|i| dom.tag(i)).collect();
        assert_eq!(
            tags,
            vec![Some("html"), Some("head"), Some("title"), None, Some("body"), Some("ul"), Some("li"), Some("span"), None, Some("li"), Some("img")]
        );
        assert_eq!(dom.text_content(7), "Sony A7");
    }

    #[test]
    fn path_round_trip() {
        let dom = Dom::parse(PAGE);
        for id in 0..dom.len() {
            if dom.tag(id).is_some() {
                assert_eq!(dom.replay_path(&dom.dom_path(id)), Some(id));
            }
        }
        let p = dom.dom_path(10);
        assert_eq!(p[3], PathSeg { tag: "li".into(), index: 1, classes: vec!["item".into()] });
    }

    #[test]
    fn css_maps_to_arena_ids() {
        assert_eq!(css_select(PAGE, "li.item", None).unwrap(), vec![6, 9]);
        assert_eq!(css_select(PAGE, "img", Some(9)).unwrap(), vec![10]);
        assert!(css_select(PAGE, "li[", None).is_err());
    }

    #[test]
    fn common_ancestor() {
        let dom = Dom::parse(PAGE);
        assert_eq!(dom.common_ancestor(&[7, 10]), Some(5));
        assert_eq!(dom.common_ancestor(&[7]), Some(7));
    }
}
