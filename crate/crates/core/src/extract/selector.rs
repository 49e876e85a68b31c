//! Exemplar generalization and structured extraction over a snapshot.

use serde::{Deserialize, Serialize};

use super::dom::{Dom, PathSeg};
use super::snapshot::PageSnapshot;
use super::{capture_element, ExtractError};
use crate::table::{Cell, Column};
use crate::value::{parse_number, CellValue, ValueType};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementSelection {
    pub snapshot_id: String,
    pub node_id: usize,
    pub dom_path: Vec<PathSeg>,
}

impl ElementSelection {
    pub fn new(snapshot: &PageSnapshot, node_id: usize) -> Result<Self, ExtractError> {
        if snapshot.dom.node(node_id).is_none() {
            return Err(ExtractError::UnknownNode(node_id));
        }
        Ok(Self { snapshot_id: snapshot.snapshot_id.clone(), node_id, dom_path: snapshot.dom.dom_path(node_id) })
    }
}

/// A path segment whose child index may be wildcarded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSeg {
    pub tag: String,
    /// `None` matches any element child with this tag and class list.
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
}

/// One step below a container: the `ordinal`-th element child carrying this
/// tag and exact class list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubSeg {
    pub tag: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
    #[serde(default)]
    pub ordinal: usize,
}

pub type FieldPath = Vec<SubSeg>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizedSelector {
    pub snapshot_id: String,
    pub path_pattern: Vec<PatternSeg>,
    /// Index into `path_pattern` of the record container (the deepest
    /// wildcard).
    pub container_depth: usize,
    /// Relative paths from the container, one per column.
    pub field_subpaths: Vec<FieldPath>,
    pub match_count: usize,
}

/// Generalizes two or more exemplar selections from one snapshot. Positions
/// where the paths differ only in child index become wildcards; any other
/// difference means there is no common pattern.
pub fn generalize_selection(snapshot: &PageSnapshot, exemplars: &[ElementSelection]) -> Result<GeneralizedSelector, ExtractError> {
    if exemplars.len() < 2 {
        return Err(ExtractError::NoCommonPattern("at least two exemplars are required".into()));
    }
    if let Some(e) = exemplars.iter().find(|e| e.snapshot_id != snapshot.snapshot_id) {
        return Err(ExtractError::MixedSnapshots(e.snapshot_id.clone()));
    }
    let first = &exemplars[0].dom_path;
    if exemplars.iter().any(|e| e.dom_path.len() != first.len()) {
        return Err(ExtractError::NoCommonPattern("exemplars sit at different depths".into()));
    }
    let mut pattern = Vec::with_capacity(first.len());
    let mut deepest_wildcard = None;
    for (d, seg) in first.iter().enumerate() {
        if exemplars.iter().any(|e| e.dom_path[d].tag != seg.tag || e.dom_path[d].classes != seg.classes) {
            return Err(ExtractError::NoCommonPattern(format!("exemplars differ in tag or classes at depth {d}")));
        }
        let same_index = exemplars.iter().all(|e| e.dom_path[d].index == seg.index);
        if !same_index {
            deepest_wildcard = Some(d);
        }
        pattern.push(PatternSeg { tag: seg.tag.clone(), index: same_index.then_some(seg.index), classes: seg.classes.clone() });
    }
    let Some(container_depth) = deepest_wildcard else {
        return Err(ExtractError::NoCommonPattern("exemplar paths are identical".into()));
    };

    let dom = &snapshot.dom;
    let anchor = exemplars.iter().map(|e| e.node_id).min().expect("non-empty");
    let anchor = if dom.tag(anchor).is_some() { anchor } else { dom.parent(anchor).unwrap_or(0) };
    let container = container_of(dom, anchor, container_depth);
    let field = field_path(dom, container, anchor).ok_or_else(|| ExtractError::NoCommonPattern("exemplar outside its container".into()))?;
    let mut selector = GeneralizedSelector {
        snapshot_id: snapshot.snapshot_id.clone(),
        path_pattern: pattern,
        container_depth,
        field_subpaths: vec![field],
        match_count: 0,
    };
    selector.match_count = match_nodes(dom, &selector.path_pattern).len();
    Ok(selector)
}

fn container_of(dom: &Dom, node: usize, depth: usize) -> usize {
    let mut cur = node;
    while dom.depth(cur) > depth {
        cur = dom.parent(cur).expect("deeper than the container");
    }
    cur
}

/// All nodes matching a pattern, in document order.
pub fn match_nodes(dom: &Dom, pattern: &[PatternSeg]) -> Vec<usize> {
    let Some((first, rest)) = pattern.split_first() else { return Vec::new() };
    if dom.is_empty() || dom.tag(0) != Some(first.tag.as_str()) {
        return Vec::new();
    }
    let mut frontier = vec![0];
    for seg in rest {
        let mut next = Vec::new();
        for &n in &frontier {
            for (i, c) in dom.element_children(n).enumerate() {
                if seg.index.is_some_and(|want| want != i) {
                    continue;
                }
                if dom.tag(c) == Some(seg.tag.as_str()) && dom.classes(c) == seg.classes {
                    next.push(c);
                }
            }
        }
        frontier = next;
    }
    frontier
}

impl GeneralizedSelector {
    /// Record containers in document order, one per full-pattern match.
    pub fn containers(&self, dom: &Dom) -> Vec<usize> {
        match_nodes(dom, &self.path_pattern).into_iter().map(|n| container_of(dom, n, self.container_depth)).collect()
    }
}

/// Record containers found by generalizing each group of captured nodes
/// (one group per table column), merged in document order. Groups with
/// fewer than two nodes or no common pattern are skipped, so a field that
/// some records lack does not hide those records. A field whose position
/// inside the record varies generalizes one level too deep, so every group
/// is cut at the shallowest container depth found.
pub fn union_containers(snapshot: &PageSnapshot, groups: &[Vec<usize>]) -> Vec<usize> {
    let mut selectors = Vec::new();
    for g in groups {
        let mut nodes = g.clone();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.len() < 2 {
            continue;
        }
        let Ok(exemplars) = nodes.iter().map(|&n| ElementSelection::new(snapshot, n)).collect::<Result<Vec<_>, _>>() else { continue };
        if let Ok(sel) = generalize_selection(snapshot, &exemplars) {
            selectors.push(sel);
        }
    }
    let Some(depth) = selectors.iter().map(|s| s.container_depth).min() else { return Vec::new() };
    let dom = &snapshot.dom;
    let mut out: Vec<usize> = selectors.iter().flat_map(|s| match_nodes(dom, &s.path_pattern)).map(|n| container_of(dom, n, depth)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Relative path from `container` down to `node`.
pub fn field_path(dom: &Dom, container: usize, node: usize) -> Option<FieldPath> {
    let node = if dom.tag(node).is_some() { node } else { dom.parent(node)? };
    if !dom.is_ancestor_or_self(container, node) {
        return None;
    }
    let mut segs = Vec::new();
    let mut cur = node;
    while cur != container {
        let parent = dom.parent(cur)?;
        let tag = dom.tag(cur)?.to_string();
        let classes = dom.classes(cur);
        let ordinal = dom
            .element_children(parent)
            .take_while(|&c| c != cur)
            .filter(|&c| dom.tag(c) == Some(tag.as_str()) && dom.classes(c) == classes)
            .count();
        segs.push(SubSeg { tag, classes, ordinal });
        cur = parent;
    }
    segs.reverse();
    Some(segs)
}

pub fn resolve_field(dom: &Dom, container: usize, path: &[SubSeg]) -> Option<usize> {
    let mut cur = container;
    for seg in path {
        cur = dom
            .element_children(cur)
            .filter(|&c| dom.tag(c) == Some(seg.tag.as_str()) && dom.classes(c) == seg.classes)
            .nth(seg.ordinal)?;
    }
    Some(cur)
}

/// Value-bearing descendants of a container: images and elements with their
/// own text. Used when no fields are named explicitly.
pub fn default_fields(dom: &Dom, container: usize) -> Vec<FieldPath> {
    let mut nodes: Vec<usize> = std::iter::once(container).chain(dom.descendants(container)).collect();
    nodes.retain(|&n| dom.tag(n) == Some("img") || (dom.tag(n).is_some() && !dom.own_text(n).is_empty()));
    nodes.into_iter().filter_map(|n| field_path(dom, container, n)).collect()
}

/// One row per container; absent fields become missing cells.
pub fn extract_rows(snapshot: &PageSnapshot, containers: &[usize], fields: &[FieldPath]) -> Vec<Vec<Cell>> {
    containers
        .iter()
        .map(|&c| {
            fields
                .iter()
                .map(|f| match resolve_field(&snapshot.dom, c, f) {
                    Some(node) => {
                        let (value, source) = capture_element(snapshot, node).expect("resolved node exists");
                        Cell { value, source: Some(source) }
                    }
                    None => Cell::missing(),
                })
                .collect()
        })
        .collect()
}

const GENERIC_CLASS_TOKENS: &[&str] = &["a", "text", "value", "field", "item", "label", "content", "inner", "wrapper", "col", "row"];

/// Turns a class token such as `user-rating` or `productTitle` into a header
/// ("User Rating", "Product Title").
pub fn humanize(token: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    let mut cur = String::new();
    let mut prev_lower = false;
    for ch in token.chars() {
        if ch == '-' || ch == '_' || ch == ' ' {
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
            prev_lower = false;
            continue;
        }
        if ch.is_uppercase() && prev_lower && !cur.is_empty() {
            words.push(std::mem::take(&mut cur));
        }
        prev_lower = ch.is_lowercase() || ch.is_ascii_digit();
        cur.push(ch);
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words
        .iter()
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c.flat_map(char::to_lowercase)).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Header proposed for a field node: its most specific class token, else
/// the tag for images and links, else `None`.
pub fn field_name(dom: &Dom, node: usize) -> Option<String> {
    let raw = dom.attr(node, "class").unwrap_or("");
    let token = raw
        .split_whitespace()
        .filter(|t| !GENERIC_CLASS_TOKENS.contains(&t.to_ascii_lowercase().as_str()))
        .filter(|t| t.chars().any(char::is_alphabetic))
        .last();
    if let Some(t) = token {
        return Some(humanize(t));
    }
    match dom.tag(node)? {
        "img" => Some("Image".into()),
        "a" => Some("Link".into()),
        _ => None,
    }
}

/// Proposed column for one field, from its values over all containers.
pub fn infer_column(snapshot: &PageSnapshot, containers: &[usize], field: &FieldPath, position: usize) -> Column {
    let dom = &snapshot.dom;
    let nodes: Vec<usize> = containers.iter().filter_map(|&c| resolve_field(dom, c, field)).collect();
    let name = nodes.first().and_then(|&n| field_name(dom, n)).unwrap_or_else(|| format!("Column {}", position + 1));
    let values: Vec<CellValue> = nodes.iter().filter_map(|&n| capture_element(snapshot, n).ok()).map(|(v, _)| v).collect();
    let present: Vec<&CellValue> = values.iter().filter(|v| !v.is_missing()).collect();
    let declared_type = if !present.is_empty() && present.iter().all(|v| matches!(v, CellValue::ImageRef(_))) {
        ValueType::ImageRef
    } else if !present.is_empty() && present.iter().all(|v| v.as_text().is_some_and(|s| parse_number(s).is_some())) {
        ValueType::Number
    } else {
        ValueType::Text
    };
    Column::new(name, declared_type)
}

/// Schema proposal for a selector: one column per field, names made unique.
pub fn infer_schema(snapshot: &PageSnapshot, selector: &GeneralizedSelector) -> Result<Vec<Column>, ExtractError> {
    let containers = selector.containers(&snapshot.dom);
    if containers.is_empty() {
        return Err(ExtractError::NoMatches);
    }
    let mut cols: Vec<Column> = selector
        .field_subpaths
        .iter()
        .enumerate()
        .map(|(i, f)| infer_column(snapshot, &containers, f, i))
        .collect();
    dedupe_names(&mut cols);
    Ok(cols)
}

pub fn dedupe_names(cols: &mut [Column]) {
    for i in 1..cols.len() {
        let base = cols[i].name.clone();
        let mut k = 2;
        while cols[..i].iter().any(|c| c.name == cols[i].name) {
            cols[i].name = format!("{base} {k}");
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(n: usize) -> PageSnapshot {
        let items: String = (0..n)
            .map(|i| {
                let rating = if i == 3 { String::new() } else { format!("<span class=\"rating\">{}.5</span>", i % 5) };
                format!(
                    "<li class=\"card\"><img class=\"thumb\" src=\"img/{i}.jpg\"><h2 class=\"product-title\">Cam {i}</h2>\
                     <span class=\"price\">${i}99</span>{rating}</li>"
                )
            })
            .collect();
        let html = format!(
            "<html><head></head><body><ul class=\"nav\"><li class=\"card\"><a>Home</a></li></ul>\
             <ul class=\"results\">{items}</ul></body></html>"
        );
        PageSnapshot::parse(&html, "http://shop/").unwrap()
    }

    fn title_nodes(s: &PageSnapshot) -> Vec<usize> {
        (0..s.dom.len()).filter(|&i| s.dom.classes(i) == ["product-title"]).collect()
    }

    fn sel(s: &PageSnapshot, ids: &[usize]) -> Vec<ElementSelection> {
        ids.iter().map(|&i| ElementSelection::new(s, i).unwrap()).collect()
    }

    #[test]
    fn two_titles_generalize_to_all_cards() {
        let s = page(20);
        let titles = title_nodes(&s);
        let g = generalize_selection(&s, &sel(&s, &[titles[1], titles[4]])).unwrap();
        assert_eq!(g.match_count, 20);
        assert_eq!(g.containers(&s.dom).len(), 20);
        assert_eq!(g.path_pattern.iter().filter(|p| p.index.is_none()).count(), 1);
    }

    #[test]
    fn order_insensitive() {
        let s = page(12);
        let t = title_nodes(&s);
        let a = generalize_selection(&s, &sel(&s, &[t[2], t[7], t[9]])).unwrap();
        let b = generalize_selection(&s, &sel(&s, &[t[9], t[2], t[7]])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_paths_are_degenerate() {
        let s = page(5);
        let t = title_nodes(&s);
        assert!(matches!(generalize_selection(&s, &sel(&s, &[t[0], t[0]])), Err(ExtractError::NoCommonPattern(_))));
    }

    #[test]
    fn different_tags_have_no_pattern() {
        let s = page(5);
        let t = title_nodes(&s);
        let img = s.dom.element_children(s.dom.parent(t[1]).unwrap()).next().unwrap();
        assert!(matches!(generalize_selection(&s, &sel(&s, &[t[0], img])), Err(ExtractError::NoCommonPattern(_))));
    }

    #[test]
    fn rows_fields_and_schema() {
        let s = page(6);
        let t = title_nodes(&s);
        let cards: Vec<usize> = t.iter().map(|&n| s.dom.parent(n).unwrap()).collect();
        let mut g = generalize_selection(&s, &sel(&s, &[cards[0], cards[1]])).unwrap();
        assert_eq!(g.match_count, 6);
        let containers = g.containers(&s.dom);
        g.field_subpaths = default_fields(&s.dom, containers[0]);
        assert_eq!(g.field_subpaths.len(), 4);
        let rows = extract_rows(&s, &containers, &g.field_subpaths);
        assert_eq!(rows.len(), 6);
        assert!(rows[3][3].value.is_missing());
        assert_eq!(rows[0][0].value, CellValue::ImageRef("img/0.jpg".into()));
        let names: Vec<String> = infer_schema(&s, &g).unwrap().into_iter().map(|c| format!("{}:{}", c.name, c.declared_type)).collect();
        assert_eq!(names, ["Thumb:image-ref", "Product Title:text", "Price:number", "Rating:number"]);
    }

    #[test]
    fn humanize_tokens() {
        assert_eq!(humanize("user-rating"), "User Rating");
        assert_eq!(humanize("productTitle"), "Product Title");
        assert_eq!(humanize("price"), "Price");
    }
}
