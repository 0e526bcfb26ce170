//! Lenient HTML parsing into an immutable, arena-backed element tree.
//!
//! Node ids are pre-order positions, so comparing ids compares document order.
//! Documents never change after construction; edits go through the owned
//! [`Element`]/[`Node`] tree and are recompiled into a fresh [`DomDocument`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Pre-order index of an element inside its document.
pub type NodeId = usize;

/// Tag of the synthetic root that holds top-level content.
pub const ROOT_TAG: &str = "#document";

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track",
    "wbr",
];

const RAW_TEXT_ELEMENTS: &[&str] = &["script", "style"];
const ESCAPABLE_RAW_TEXT_ELEMENTS: &[&str] = &["textarea", "title"];

/// Start tags that implicitly close an open `p`.
const CLOSES_P: &[&str] = &[
    "address", "article", "aside", "blockquote", "details", "div", "dl", "fieldset", "figure",
    "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "menu", "nav",
    "ol", "p", "pre", "section", "table", "ul",
];

const BUTTON_SCOPE: &[&str] = &[
    ROOT_TAG, "applet", "button", "caption", "html", "marquee", "object", "table", "td", "template",
    "th",
];

#[derive(Debug, Error)]
pub enum DomError {
    #[error("input is not valid UTF-8: {0}")]
    ParseFailure(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

/// One piece of an element's content, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Element(NodeId),
    Text(String),
}

/// An element inside a [`DomDocument`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementNode {
    id: NodeId,
    tag: String,
    attributes: Vec<(String, String)>,
    classes: Vec<String>,
    parent: Option<NodeId>,
    content: Vec<Content>,
}

impl ElementNode {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn attributes(&self) -> &[(String, String)] {
        &self.attributes
    }

    /// Attribute lookup; `name` is case-folded before comparison.
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn has_attr(&self, name: &str) -> bool {
        self.attr(name).is_some()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes.iter().any(|c| c == class)
    }

    pub fn content(&self) -> &[Content] {
        &self.content
    }

    /// Child elements, skipping text.
    pub fn children(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.content.iter().filter_map(|c| match c {
            Content::Element(id) => Some(*id),
            Content::Text(_) => None,
        })
    }

    /// Text fragments directly under this element, concatenated.
    pub fn direct_text(&self) -> String {
        self.content
            .iter()
            .filter_map(|c| match c {
                Content::Text(t) => Some(t.as_str()),
                Content::Element(_) => None,
            })
            .collect()
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }
}

/// Owned, editable element used to build and mutate documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub tag: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(String),
}

impl Element {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into().to_ascii_lowercase(),
            attributes: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_attr(mut self, name: &str, value: &str) -> Self {
        self.set_attr(name, value);
        self
    }

    pub fn with_text(mut self, text: &str) -> Self {
        self.children.push(Node::Text(text.to_string()));
        self
    }

    pub fn with_child(mut self, child: Element) -> Self {
        self.children.push(Node::Element(child));
        self
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Sets or replaces an attribute, keeping its original position.
    pub fn set_attr(&mut self, name: &str, value: &str) {
        let name = name.to_ascii_lowercase();
        match self.attributes.iter_mut().find(|(k, _)| *k == name) {
            Some(slot) => slot.1 = value.to_string(),
            None => self.attributes.push((name, value.to_string())),
        }
    }

    pub fn remove_attr(&mut self, name: &str) -> bool {
        let before = self.attributes.len();
        self.attributes.retain(|(k, _)| !k.eq_ignore_ascii_case(name));
        before != self.attributes.len()
    }

    pub fn classes(&self) -> Vec<String> {
        split_classes(self.attr("class").unwrap_or(""))
    }

    pub fn set_classes(&mut self, classes: &[String]) {
        if classes.is_empty() {
            self.remove_attr("class");
        } else {
            self.set_attr("class", &classes.join(" "));
        }
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.classes().iter().any(|c| c == class)
    }

    /// Replaces all content with a single text node.
    pub fn set_text(&mut self, text: &str) {
        self.children = vec![Node::Text(text.to_string())];
    }

    /// Pre-order visit of this element and all element descendants.
    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Element)) {
        f(self);
        for child in &mut self.children {
            if let Node::Element(el) = child {
                el.walk_mut(f);
            }
        }
    }

    /// Removes every descendant element for which `pred` holds. Returns the count removed.
    pub fn remove_where(&mut self, pred: &dyn Fn(&Element) -> bool) -> usize {
        let mut removed = 0;
        self.children.retain(|c| match c {
            Node::Element(el) if pred(el) => {
                removed += 1;
                false
            }
            _ => true,
        });
        for child in &mut self.children {
            if let Node::Element(el) = child {
                removed += el.remove_where(pred);
            }
        }
        removed
    }

    /// First descendant (or self) satisfying `pred`, pre-order.
    pub fn find_mut(&mut self, pred: &dyn Fn(&Element) -> bool) -> Option<&mut Element> {
        if pred(self) {
            return Some(self);
        }
        for child in &mut self.children {
            if let Node::Element(el) = child {
                if let Some(found) = el.find_mut(pred) {
                    return Some(found);
                }
            }
        }
        None
    }
}

fn split_classes(value: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in value.split_ascii_whitespace() {
        if !out.iter().any(|x| x == c) {
            out.push(c.to_string());
        }
    }
    out
}

/// Parsed, immutable document.
#[derive(Debug, Clone)]
pub struct DomDocument {
    nodes: Vec<ElementNode>,
    ids: HashMap<String, NodeId>,
    page_key: String,
    source_path: Option<PathBuf>,
}

impl DomDocument {
    /// Compiles an owned tree. `root` is the synthetic document element whose
    /// children are the top-level nodes.
    pub fn from_tree(root: Element, page_key: impl Into<String>) -> Self {
        let mut nodes = Vec::new();
        compile(root, None, &mut nodes);
        nodes[0].tag = ROOT_TAG.to_string();
        let mut ids = HashMap::new();
        for n in &nodes {
            if let Some(id) = n.attr("id") {
                ids.entry(id.to_string()).or_insert(n.id);
            }
        }
        Self {
            nodes,
            ids,
            page_key: page_key.into(),
            source_path: None,
        }
    }

    pub fn with_source_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.source_path = Some(path.into());
        self
    }

    /// Converts back into an editable tree rooted at the synthetic document element.
    pub fn to_tree(&self) -> Element {
        self.owned(0)
    }

    fn owned(&self, id: NodeId) -> Element {
        let n = &self.nodes[id];
        Element {
            tag: n.tag.clone(),
            attributes: n.attributes.clone(),
            children: n
                .content
                .iter()
                .map(|c| match c {
                    Content::Element(cid) => Node::Element(self.owned(*cid)),
                    Content::Text(t) => Node::Text(t.clone()),
                })
                .collect(),
        }
    }

    /// Applies `edit` to an owned copy of the tree and compiles the result.
    pub fn edited(&self, edit: impl FnOnce(&mut Element)) -> DomDocument {
        let mut tree = self.to_tree();
        edit(&mut tree);
        let mut doc = DomDocument::from_tree(tree, self.page_key.clone());
        doc.source_path = self.source_path.clone();
        doc
    }

    pub fn root(&self) -> &ElementNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &ElementNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    /// All elements in document order, including the synthetic root.
    pub fn nodes(&self) -> &[ElementNode] {
        &self.nodes
    }

    /// Real elements in document order (synthetic root excluded).
    pub fn elements(&self) -> impl Iterator<Item = &ElementNode> {
        self.nodes.iter().skip(1)
    }

    pub fn page_key(&self) -> &str {
        &self.page_key
    }

    pub fn source_path(&self) -> Option<&Path> {
        self.source_path.as_deref()
    }

    /// First element in document order carrying `id`.
    pub fn element_by_id(&self, id: &str) -> Option<&ElementNode> {
        self.ids.get(id).map(|&n| &self.nodes[n])
    }

    pub fn ancestors(&self, id: NodeId) -> Ancestors<'_> {
        Ancestors {
            doc: self,
            next: self.nodes[id].parent,
        }
    }

    /// `true` if `ancestor` is a proper ancestor of `id`.
    pub fn is_ancestor(&self, ancestor: NodeId, id: NodeId) -> bool {
        self.ancestors(id).any(|a| a.id == ancestor)
    }

    /// Attribute/style-based visibility; no layout is computed.
    pub fn is_visible(&self, id: NodeId) -> bool {
        std::iter::once(&self.nodes[id])
            .chain(self.ancestors(id))
            .all(|n| !hides_itself(n))
    }

    /// Descendant text in document order, whitespace-collapsed and trimmed.
    pub fn normalized_text(&self, id: NodeId) -> String {
        let mut raw = String::new();
        self.collect_text(id, &mut raw);
        normalize_whitespace(&raw)
    }

    fn collect_text(&self, id: NodeId, out: &mut String) {
        let n = &self.nodes[id];
        if RAW_TEXT_ELEMENTS.contains(&n.tag.as_str()) {
            return;
        }
        for c in &n.content {
            match c {
                Content::Text(t) => out.push_str(t),
                Content::Element(cid) => self.collect_text(*cid, out),
            }
        }
    }

    /// Tree equality ignoring page key and source path.
    pub fn structurally_eq(&self, other: &DomDocument) -> bool {
        self.nodes == other.nodes
    }

    /// Deterministic HTML serialization that re-parses to an equal tree.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for c in &self.nodes[0].content {
            self.write_content(c, ROOT_TAG, &mut out);
        }
        out
    }

    /// Serializes one element and its subtree.
    pub fn outer_html(&self, id: NodeId) -> String {
        let mut out = String::new();
        self.write_element(id, &mut out);
        out
    }

    fn write_content(&self, c: &Content, parent_tag: &str, out: &mut String) {
        match c {
            Content::Element(id) => self.write_element(*id, out),
            Content::Text(t) if RAW_TEXT_ELEMENTS.contains(&parent_tag) => out.push_str(t),
            Content::Text(t) => escape_text(t, out),
        }
    }

    fn write_element(&self, id: NodeId, out: &mut String) {
        let n = &self.nodes[id];
        out.push('<');
        out.push_str(&n.tag);
        for (k, v) in &n.attributes {
            out.push(' ');
            out.push_str(k);
            if !v.is_empty() {
                out.push_str("=\"");
                escape_attr(v, out);
                out.push('"');
            }
        }
        out.push('>');
        if is_void(&n.tag) {
            return;
        }
        for c in &n.content {
            self.write_content(c, &n.tag, out);
        }
        let _ = write!(out, "</{}>", n.tag);
    }
}

pub struct Ancestors<'a> {
    doc: &'a DomDocument,
    next: Option<NodeId>,
}

impl<'a> Iterator for Ancestors<'a> {
    type Item = &'a ElementNode;

    fn next(&mut self) -> Option<Self::Item> {
        let id = self.next?;
        let n = &self.doc.nodes[id];
        self.next = n.parent;
        Some(n)
    }
}

fn compile(el: Element, parent: Option<NodeId>, nodes: &mut Vec<ElementNode>) -> NodeId {
    let id = nodes.len();
    let mut attributes: Vec<(String, String)> = Vec::with_capacity(el.attributes.len());
    for (k, v) in el.attributes {
        let k = k.to_ascii_lowercase();
        if !attributes.iter().any(|(x, _)| *x == k) {
            attributes.push((k, v));
        }
    }
    let classes = attributes
        .iter()
        .find(|(k, _)| k == "class")
        .map(|(_, v)| split_classes(v))
        .unwrap_or_default();
    nodes.push(ElementNode {
        id,
        tag: el.tag.to_ascii_lowercase(),
        attributes,
        classes,
        parent,
        content: Vec::new(),
    });
    let void = is_void(&nodes[id].tag);
    let mut content: Vec<Content> = Vec::new();
    for child in el.children {
        match child {
            Node::Text(t) if t.is_empty() => {}
            Node::Text(t) => match content.last_mut() {
                Some(Content::Text(prev)) => prev.push_str(&t),
                _ => content.push(Content::Text(t)),
            },
            Node::Element(_) if void => {}
            Node::Element(child) => {
                let cid = compile(child, Some(id), nodes);
                content.push(Content::Element(cid));
            }
        }
    }
    if void {
        content.clear();
    }
    nodes[id].content = content;
    id
}

fn hides_itself(n: &ElementNode) -> bool {
    if n.has_attr("hidden") {
        return true;
    }
    if n
        .attr("aria-hidden")
        .is_some_and(|v| v.trim().eq_ignore_ascii_case("true"))
    {
        return true;
    }
    if let Some(style) = n.attr("style") {
        let compact: String = style
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        if compact.contains("display:none") || compact.contains("visibility:hidden") {
            return true;
        }
    }
    n.tag == "input"
        && n
            .attr("type")
            .is_some_and(|t| t.trim().eq_ignore_ascii_case("hidden"))
}

/// Collapses runs of Unicode whitespace to single spaces and trims.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn escape_text(s: &str, out: &mut String) {
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(ch),
        }
    }
}

fn escape_attr(s: &str, out: &mut String) {
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses HTML leniently. Malformed markup never fails.
pub fn parse_document(html: &str, page_key: &str) -> DomDocument {
    let root = TreeBuilder::new().run(html);
    DomDocument::from_tree(root, page_key)
}

/// Like [`parse_document`] but for raw bytes; fails only on invalid UTF-8.
pub fn parse_bytes(bytes: &[u8], page_key: &str) -> Result<DomDocument, DomError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DomError::ParseFailure(e.to_string()))?;
    Ok(parse_document(text, page_key))
}

pub fn load_document(path: &Path, page_key: &str) -> Result<DomDocument, DomError> {
    let bytes = std::fs::read(path).map_err(|source| DomError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_bytes(&bytes, page_key)?.with_source_path(path))
}

struct TreeBuilder {
    stack: Vec<Element>,
}

impl TreeBuilder {
    fn new() -> Self {
        Self {
            stack: vec![Element::new(ROOT_TAG)],
        }
    }

    fn run(mut self, html: &str) -> Element {
        let mut lexer = Lexer { src: html, pos: 0 };
        while let Some(tok) = lexer.next_token() {
            match tok {
                Token::Text(t) => self.text(t),
                Token::Start {
                    name,
                    attributes,
                    self_closing,
                } => {
                    let raw = RAW_TEXT_ELEMENTS.contains(&name.as_str())
                        || ESCAPABLE_RAW_TEXT_ELEMENTS.contains(&name.as_str());
                    let tag = name.clone();
                    self.start(name, attributes, self_closing);
                    if raw && !self_closing {
                        let body = lexer.raw_text_until_end(&tag);
                        if RAW_TEXT_ELEMENTS.contains(&tag.as_str()) {
                            self.text(body.to_string());
                        } else {
                            self.text(decode_entities(body));
                        }
                        self.end(&tag);
                    }
                }
                Token::End(name) => self.end(&name),
            }
        }
        while self.stack.len() > 1 {
            self.pop();
        }
        self.stack.pop().expect("root")
    }

    fn top(&mut self) -> &mut Element {
        self.stack.last_mut().expect("stack never empty")
    }

    fn text(&mut self, t: String) {
        if t.is_empty() {
            return;
        }
        let top = self.top();
        if let Some(Node::Text(prev)) = top.children.last_mut() {
            prev.push_str(&t);
        } else {
            top.children.push(Node::Text(t));
        }
    }

    fn pop(&mut self) {
        let el = self.stack.pop().expect("non-root");
        self.top().children.push(Node::Element(el));
    }

    /// Index of the nearest open `tag`, searching down to (not past) a scope boundary.
    fn find_open(&self, tag: &str, boundaries: &[&str]) -> Option<usize> {
        for (i, el) in self.stack.iter().enumerate().rev() {
            if el.tag == tag {
                return Some(i);
            }
            if boundaries.contains(&el.tag.as_str()) {
                return None;
            }
        }
        None
    }

    fn pop_to(&mut self, index: usize) {
        while self.stack.len() > index {
            self.pop();
        }
    }

    fn start(&mut self, name: String, attributes: Vec<(String, String)>, self_closing: bool) {
        if CLOSES_P.contains(&name.as_str()) {
            if let Some(i) = self.find_open("p", BUTTON_SCOPE) {
                self.pop_to(i);
            }
        }
        match name.as_str() {
            "li" => {
                if let Some(i) = self.find_open("li", &[ROOT_TAG, "ul", "ol", "menu"]) {
                    self.pop_to(i);
                }
            }
            "dt" | "dd" => {
                let i = self
                    .find_open("dt", &[ROOT_TAG, "dl"])
                    .or_else(|| self.find_open("dd", &[ROOT_TAG, "dl"]));
                if let Some(i) = i {
                    self.pop_to(i);
                }
            }
            "td" | "th" => {
                let bounds = [ROOT_TAG, "tr", "table"];
                let i = self
                    .find_open("td", &bounds)
                    .or_else(|| self.find_open("th", &bounds));
                if let Some(i) = i {
                    self.pop_to(i);
                }
            }
            "tr" => {
                if let Some(i) = self.find_open("tr", &[ROOT_TAG, "table", "tbody", "thead", "tfoot"]) {
                    self.pop_to(i);
                }
            }
            "option" => {
                if let Some(i) = self.find_open("option", &[ROOT_TAG, "select", "datalist"]) {
                    self.pop_to(i);
                }
            }
            _ => {}
        }
        let mut el = Element::new(name);
        for (k, v) in attributes {
            if el.attr(&k).is_none() {
                el.attributes.push((k, v));
            }
        }
        if self_closing || is_void(&el.tag) {
            self.top().children.push(Node::Element(el));
        } else {
            self.stack.push(el);
        }
    }

    fn end(&mut self, name: &str) {
        if let Some(i) = self.find_open(name, &[ROOT_TAG]) {
            self.pop_to(i);
        }
    }
}

enum Token {
    Text(String),
    Start {
        name: String,
        attributes: Vec<(String, String)>,
        self_closing: bool,
    },
    End(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn skip_past(&mut self, pat: &str) {
        match self.rest().find(pat) {
            Some(i) => self.pos += i + pat.len(),
            None => self.pos = self.src.len(),
        }
    }

    fn next_token(&mut self) -> Option<Token> {
        loop {
            let rest = self.rest();
            if rest.is_empty() {
                return None;
            }
            if !rest.starts_with('<') {
                let end = rest.find('<').unwrap_or(rest.len());
                let text = &rest[..end];
                self.pos += end;
                return Some(Token::Text(decode_entities(text)));
            }
            if rest.starts_with("<!--") {
                self.pos += 4;
                self.skip_past("-->");
                continue;
            }
            if rest.starts_with("<!") || rest.starts_with("<?") {
                self.skip_past(">");
                continue;
            }
            let mut chars = rest.chars();
            chars.next();
            match chars.next() {
                Some('/') => {
                    if rest[2..].starts_with(|c: char| c.is_ascii_alphabetic()) {
                        self.pos += 2;
                        let name = self.tag_name();
                        self.skip_past(">");
                        return Some(Token::End(name));
                    }
                    self.pos += 2;
                    return Some(Token::Text("</".to_string()));
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    self.pos += 1;
                    return Some(self.start_tag());
                }
                _ => {
                    self.pos += 1;
                    return Some(Token::Text("<".to_string()));
                }
            }
        }
    }

    fn tag_name(&mut self) -> String {
        let rest = self.rest();
        let end = rest
            .find(|c: char| c.is_whitespace() || c == '/' || c == '>')
            .unwrap_or(rest.len());
        self.pos += end;
        rest[..end].to_ascii_lowercase()
    }

    fn start_tag(&mut self) -> Token {
        let name = self.tag_name();
        let mut attributes = Vec::new();
        let mut self_closing = false;
        loop {
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('>') => {
                    self.bump();
                    break;
                }
                Some('/') => {
                    self.bump();
                    if self.peek() == Some('>') {
                        self.bump();
                        self_closing = true;
                        break;
                    }
                }
                Some(_) => {
                    let rest = self.rest();
                    let mut end = rest
                        .find(|c: char| c.is_whitespace() || c == '/' || c == '>' || c == '=')
                        .unwrap_or(rest.len());
                    if end == 0 {
                        // a stray '=' with no name
                        end = 1;
                    }
                    let attr_name = rest[..end].to_ascii_lowercase();
                    self.pos += end;
                    self.skip_ws();
                    let mut value = String::new();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.skip_ws();
                        value = self.attr_value();
                    }
                    attributes.push((attr_name, value));
                }
            }
        }
        Token::Start {
            name,
            attributes,
            self_closing,
        }
    }

    fn attr_value(&mut self) -> String {
        match self.peek() {
            Some(q @ ('"' | '\'')) => {
                self.bump();
                let rest = self.rest();
                let end = rest.find(q).unwrap_or(rest.len());
                let raw = &rest[..end];
                self.pos += end;
                self.bump();
                decode_entities(raw)
            }
            _ => {
                let rest = self.rest();
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '>')
                    .unwrap_or(rest.len());
                self.pos += end;
                decode_entities(&rest[..end])
            }
        }
    }

    /// Consumes raw text up to the matching end tag (case-insensitive) and the tag itself.
    fn raw_text_until_end(&mut self, tag: &str) -> &'a str {
        let rest = self.rest();
        let needle = format!("</{tag}");
        let lower = rest.to_ascii_lowercase();
        match lower.find(&needle) {
            Some(i) => {
                let body = &rest[..i];
                self.pos += i;
                self.skip_past(">");
                body
            }
            None => {
                self.pos = self.src.len();
                rest
            }
        }
    }
}

/// Decodes the handful of named entities fixtures use plus numeric references.
/// Unknown or unterminated references are kept literally.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let decoded = rest.find(';').filter(|&j| j <= 12).and_then(|j| {
            let body = &rest[1..j];
            let ch = match body {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some('\u{a0}'),
                "copy" => Some('\u{a9}'),
                "times" => Some('\u{d7}'),
                _ => body.strip_prefix('#').and_then(|num| {
                    let code = match num.strip_prefix(['x', 'X']) {
                        Some(hex) => u32::from_str_radix(hex, 16).ok(),
                        None => num.parse::<u32>().ok(),
                    };
                    code.and_then(char::from_u32)
                }),
            };
            ch.map(|c| (c, j))
        });
        match decoded {
            Some((c, j)) => {
                out.push(c);
                rest = &rest[j + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
