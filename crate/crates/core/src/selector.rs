//! The locator string language: a CSS subset plus `role::<role>::<name>`.
//!
//! ```text
//! locator  := "role::" ROLE "::" NAME | chain
//! chain    := compound (SP+ compound)*
//! compound := TAG? simple*           (at least one constraint)
//! simple   := "#" IDENT | "." IDENT | "[" ATTR (("=" | "*=") VALUE)? "]"
//!           | ":has-text(" STRING ")"
//! ```

use std::fmt;

use thiserror::Error;

use crate::a11y::A11yTree;
use crate::dom::{normalize_whitespace, DomDocument, ElementNode, NodeId};

const ROLE_PREFIX: &str = "role::";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectorError {
    #[error("empty locator")]
    EmptyLocator,
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
}

fn syntax(position: usize, message: impl Into<String>) -> SelectorError {
    SelectorError::Syntax {
        position,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AttrOp {
    Exists,
    Equals(String),
    Contains(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SimpleSelector {
    Id(String),
    Class(String),
    Attr { name: String, op: AttrOp },
    HasText(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Compound {
    pub tag: Option<String>,
    pub simples: Vec<SimpleSelector>,
}

impl Compound {
    pub fn tag(tag: &str) -> Self {
        Self {
            tag: Some(tag.to_ascii_lowercase()),
            simples: Vec::new(),
        }
    }

    pub fn with(mut self, simple: SimpleSelector) -> Self {
        self.simples.push(simple);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.tag.is_none() && self.simples.is_empty()
    }

    fn matches(&self, doc: &DomDocument, node: &ElementNode) -> bool {
        if node.is_root() {
            return false;
        }
        if let Some(tag) = &self.tag {
            if node.tag() != tag {
                return false;
            }
        }
        self.simples.iter().all(|s| match s {
            SimpleSelector::Id(id) => node.attr("id") == Some(id.as_str()),
            SimpleSelector::Class(c) => node.has_class(c),
            SimpleSelector::Attr { name, op } => match (node.attr(name), op) {
                (None, _) => false,
                (Some(_), AttrOp::Exists) => true,
                (Some(v), AttrOp::Equals(want)) => v == want,
                (Some(v), AttrOp::Contains(want)) => v.contains(want.as_str()),
            },
            SimpleSelector::HasText(needle) => doc
                .normalized_text(node.id())
                .to_lowercase()
                .contains(&needle.to_lowercase()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Locator {
    /// Compounds joined by descendant combinators, outermost first.
    Css(Vec<Compound>),
    /// Role plus optional accessible name; an empty name matches any name.
    Role { role: String, name: String },
}

impl Locator {
    pub fn role(role: &str, name: &str) -> Self {
        Locator::Role {
            role: role.to_string(),
            name: name.to_string(),
        }
    }

    pub fn compound(c: Compound) -> Self {
        Locator::Css(vec![c])
    }

    pub fn parse(s: &str) -> Result<Self, SelectorError> {
        parse_locator(s)
    }

    /// Matching elements in document order.
    pub fn find(&self, doc: &DomDocument, a11y: &A11yTree) -> Vec<NodeId> {
        match_locator(self, doc, a11y)
    }

    /// Matching elements that are also visible.
    pub fn find_visible(&self, doc: &DomDocument, a11y: &A11yTree) -> Vec<NodeId> {
        let mut found = match_locator(self, doc, a11y);
        found.retain(|&id| a11y.node(id).visible);
        found
    }
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locator::Role { role, name } => write!(f, "{ROLE_PREFIX}{role}::{name}"),
            Locator::Css(chain) => {
                for (i, c) in chain.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write_compound(c, f)?;
                }
                Ok(())
            }
        }
    }
}

fn write_compound(c: &Compound, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if let Some(tag) = &c.tag {
        f.write_str(tag)?;
    }
    for s in &c.simples {
        match s {
            SimpleSelector::Id(id) => write!(f, "#{id}")?,
            SimpleSelector::Class(cl) => write!(f, ".{cl}")?,
            SimpleSelector::Attr { name, op } => {
                write!(f, "[{name}")?;
                match op {
                    AttrOp::Exists => {}
                    AttrOp::Equals(v) => write!(f, "={}", quote_if_needed(v))?,
                    AttrOp::Contains(v) => write!(f, "*={}", quote_if_needed(v))?,
                }
                f.write_str("]")?;
            }
            SimpleSelector::HasText(t) => write!(f, ":has-text({})", quote(t))?,
        }
    }
    Ok(())
}

fn is_bare_value_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, ']' | '"' | '\'' | '\\' | '['))
}

fn quote_if_needed(v: &str) -> String {
    if !v.is_empty() && v.chars().all(is_bare_value_char) {
        v.to_string()
    } else {
        quote(v)
    }
}

fn quote(v: &str) -> String {
    let mut out = String::with_capacity(v.len() + 2);
    out.push('"');
    for c in v.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_' || !c.is_ascii()
}

/// Parses a serialized locator.
pub fn parse_locator(s: &str) -> Result<Locator, SelectorError> {
    if s.is_empty() {
        return Err(SelectorError::EmptyLocator);
    }
    if let Some(rest) = s.strip_prefix(ROLE_PREFIX) {
        let sep = rest
            .find("::")
            .ok_or_else(|| syntax(s.len(), "expected '::' after role"))?;
        let role = &rest[..sep];
        if role.is_empty() {
            return Err(syntax(ROLE_PREFIX.len(), "role must not be empty"));
        }
        if let Some(bad) = role.find(|c: char| !is_ident_char(c)) {
            return Err(syntax(ROLE_PREFIX.len() + bad, "invalid character in role"));
        }
        return Ok(Locator::Role {
            role: role.to_string(),
            name: rest[sep + 2..].to_string(),
        });
    }
    if s.trim().is_empty() {
        return Err(SelectorError::EmptyLocator);
    }
    CssParser { src: s, pos: 0 }.chain().map(Locator::Css)
}

struct CssParser<'a> {
    src: &'a str,
    pos: usize,
}

impl CssParser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.src[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
        self.pos != start
    }

    fn chain(&mut self) -> Result<Vec<Compound>, SelectorError> {
        self.skip_ws();
        let mut chain = Vec::new();
        loop {
            chain.push(self.compound()?);
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(chain);
            }
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SelectorError> {
        let start = self.pos;
        while self.peek().is_some_and(is_ident_char) {
            self.bump();
        }
        if self.pos == start {
            return Err(syntax(start, format!("expected {what}")));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn compound(&mut self) -> Result<Compound, SelectorError> {
        let start = self.pos;
        let mut c = Compound::default();
        if self.peek().is_some_and(|ch| ch.is_ascii_alphabetic()) {
            c.tag = Some(self.ident("tag")?.to_ascii_lowercase());
        } else if self.eat("*") {
            // universal selector adds no constraint of its own
        }
        loop {
            match self.peek() {
                Some('#') => {
                    self.bump();
                    c.simples.push(SimpleSelector::Id(self.ident("id")?));
                }
                Some('.') => {
                    self.bump();
                    c.simples.push(SimpleSelector::Class(self.ident("class name")?));
                }
                Some('[') => {
                    self.bump();
                    c.simples.push(self.attribute()?);
                }
                Some(':') => {
                    if !self.eat(":has-text(") {
                        return Err(syntax(self.pos, "unsupported pseudo-class"));
                    }
                    self.skip_ws();
                    let text = self.string_value()?;
                    self.skip_ws();
                    if !self.eat(")") {
                        return Err(syntax(self.pos, "expected ')'"));
                    }
                    c.simples.push(SimpleSelector::HasText(text));
                }
                None => break,
                Some(ch) if ch.is_whitespace() => break,
                Some(ch) => return Err(syntax(self.pos, format!("unexpected '{ch}'"))),
            }
        }
        if c.is_empty() {
            return Err(syntax(start, "empty compound selector"));
        }
        Ok(c)
    }

    fn attribute(&mut self) -> Result<SimpleSelector, SelectorError> {
        self.skip_ws();
        let name = self.ident("attribute name")?.to_ascii_lowercase();
        self.skip_ws();
        let op = if self.eat("]") {
            return Ok(SimpleSelector::Attr {
                name,
                op: AttrOp::Exists,
            });
        } else if self.eat("*=") {
            AttrOp::Contains(String::new())
        } else if self.eat("=") {
            AttrOp::Equals(String::new())
        } else {
            return Err(syntax(self.pos, "expected '=', '*=' or ']'"));
        };
        self.skip_ws();
        let value = match self.peek() {
            Some('"' | '\'') => self.string_value()?,
            _ => {
                let start = self.pos;
                while self.peek().is_some_and(is_bare_value_char) {
                    self.bump();
                }
                if self.pos == start {
                    return Err(syntax(start, "expected attribute value"));
                }
                self.src[start..self.pos].to_string()
            }
        };
        self.skip_ws();
        if !self.eat("]") {
            return Err(syntax(self.pos, "expected ']'"));
        }
        let op = match op {
            AttrOp::Contains(_) => AttrOp::Contains(value),
            _ => AttrOp::Equals(value),
        };
        Ok(SimpleSelector::Attr { name, op })
    }

    fn string_value(&mut self) -> Result<String, SelectorError> {
        let start = self.pos;
        let quote = match self.bump() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(syntax(start, "expected quoted string")),
        };
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(syntax(start, "unterminated string")),
                Some('\\') => match self.bump() {
                    Some(c) => out.push(c),
                    None => return Err(syntax(start, "unterminated string")),
                },
                Some(c) if c == quote => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }
}

/// Evaluates `loc` against `doc`, returning matches in document order.
pub fn match_locator(loc: &Locator, doc: &DomDocument, a11y: &A11yTree) -> Vec<NodeId> {
    match loc {
        Locator::Role { role, name } => {
            let want = normalize_whitespace(name).to_lowercase();
            doc.elements()
                .map(ElementNode::id)
                .filter(|&id| {
                    let n = a11y.node(id);
                    n.role.as_deref() == Some(role.as_str())
                        && (want.is_empty() || n.name.to_lowercase() == want)
                })
                .collect()
        }
        Locator::Css(chain) => {
            let Some((last, ancestors)) = chain.split_last() else {
                return Vec::new();
            };
            doc.elements()
                .filter(|n| last.matches(doc, n) && ancestors_match(doc, n.id(), ancestors))
                .map(ElementNode::id)
                .collect()
        }
    }
}

/// Greedy right-to-left ancestor walk. Greedy is exact for descendant-only chains:
/// taking the nearest matching ancestor never rules out a match further up.
fn ancestors_match(doc: &DomDocument, id: NodeId, compounds: &[Compound]) -> bool {
    let mut remaining = compounds.iter().rev().peekable();
    for anc in doc.ancestors(id) {
        match remaining.peek() {
            None => return true,
            Some(c) if c.matches(doc, anc) => {
                remaining.next();
            }
            Some(_) => {}
        }
    }
    remaining.peek().is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::a11y::extract_tree;
    use crate::dom::parse_document;

    fn find(sel: &str, html: &str) -> Vec<String> {
        let doc = parse_document(html, "t");
        let tree = extract_tree(&doc);
        let loc = parse_locator(sel).unwrap();
        match_locator(&loc, &doc, &tree)
            .into_iter()
            .map(|id| doc.outer_html(id))
            .collect()
    }

    #[test]
    fn role_forms() {
        assert_eq!(
            parse_locator("role::link::Products").unwrap(),
            Locator::role("link", "Products")
        );
        assert_eq!(
            parse_locator("role::searchbox::").unwrap(),
            Locator::role("searchbox", "")
        );
        assert!(matches!(
            parse_locator("role::::x"),
            Err(SelectorError::Syntax { position: 6, .. })
        ));
        assert!(parse_locator("role::button").is_err());
    }

    #[test]
    fn css_forms() {
        let loc = parse_locator(".btn.check_out").unwrap();
        let Locator::Css(chain) = &loc else { panic!() };
        assert_eq!(chain.len(), 1);
        assert_eq!(
            chain[0].simples,
            vec![
                SimpleSelector::Class("btn".into()),
                SimpleSelector::Class("check_out".into())
            ]
        );

        let Locator::Css(chain) = parse_locator(".product-information h2").unwrap() else {
            panic!()
        };
        assert_eq!(chain.len(), 2);
        assert_eq!(chain[1].tag.as_deref(), Some("h2"));

        let Locator::Css(chain) = parse_locator("a[href*=/view_cart]").unwrap() else {
            panic!()
        };
        assert_eq!(
            chain[0].simples[0],
            SimpleSelector::Attr {
                name: "href".into(),
                op: AttrOp::Contains("/view_cart".into())
            }
        );
    }

    #[test]
    fn quoted_values_and_has_text() {
        let loc = parse_locator(r#"button:has-text("Add to cart")"#).unwrap();
        assert_eq!(loc.to_string(), r#"button:has-text("Add to cart")"#);
        let loc = parse_locator(r#"[aria-label='Add to Cart']"#).unwrap();
        assert_eq!(loc.to_string(), r#"[aria-label="Add to Cart"]"#);
        assert_eq!(
            parse_locator("[data-qa=login-email]").unwrap().to_string(),
            "[data-qa=login-email]"
        );
    }

    #[test]
    fn errors() {
        assert_eq!(parse_locator(""), Err(SelectorError::EmptyLocator));
        assert_eq!(parse_locator("   "), Err(SelectorError::EmptyLocator));
        assert!(matches!(
            parse_locator("div > p"),
            Err(SelectorError::Syntax { position: 4, .. })
        ));
        assert!(parse_locator("[a=").is_err());
        assert!(parse_locator(":hover").is_err());
        assert!(parse_locator(r#":has-text("x"#).is_err());
        assert!(parse_locator(".").is_err());
    }

    #[test]
    fn descendant_matching() {
        let html = r#"<div class="product-information"><span><h2>Blue Top</h2></span></div><h2>Other</h2>"#;
        assert_eq!(find(".product-information h2", html), vec!["<h2>Blue Top</h2>"]);
        assert_eq!(find("div span h2", html).len(), 1);
        assert_eq!(find("span div h2", html).len(), 0);
    }

    #[test]
    fn attribute_semantics() {
        let html = r#"<a HREF="/View_cart">x</a><a href="/view_cart/">y</a>"#;
        assert_eq!(find("a[href*=/view_cart]", html).len(), 1);
        assert_eq!(find("[HREF]", html).len(), 2);
    }

    #[test]
    fn has_text_is_case_insensitive_and_includes_descendants() {
        let html = r#"<button><i></i> ADD  to <b>Cart</b></button>"#;
        assert_eq!(find(r#"button:has-text("add to cart")"#, html).len(), 1);
    }

    #[test]
    fn role_matching_uses_name() {
        let html = r#"<a href="/p">  Products </a><a href="/c">Cart</a><a>Products</a>"#;
        assert_eq!(find("role::link::products", html).len(), 1);
        assert_eq!(find("role::link::", html).len(), 2);
        assert_eq!(find("role::link::Prod", html).len(), 0);
    }

    #[test]
    fn no_match_is_empty() {
        assert!(find(".nonexistent-zzz", "<div class='a'></div>").is_empty());
    }
}
