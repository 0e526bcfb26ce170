//! Simplified accessibility tree: implicit ARIA role, accessible name and
//! visibility for every element.

use crate::dom::{normalize_whitespace, DomDocument, ElementNode, NodeId};

/// Roles an element may carry in the tree. Explicit `role` tokens outside
/// this list are ignored in favour of the implicit mapping.
pub const KNOWN_ROLES: &[&str] = &[
    "alert", "banner", "button", "cell", "checkbox", "columnheader", "combobox", "complementary",
    "contentinfo", "dialog", "form", "grid", "heading", "img", "link", "list", "listbox",
    "listitem", "main", "menu", "menubar", "menuitem", "navigation", "none", "option",
    "presentation", "progressbar", "radio", "region", "row", "rowheader", "search", "searchbox",
    "slider", "spinbutton", "status", "switch", "tab", "table", "tablist", "tabpanel", "textbox",
    "tooltip",
];

const LABELABLE: &[&str] = &["input", "select", "textarea", "button"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct A11yNode {
    pub node_id: NodeId,
    pub role: Option<String>,
    pub name: String,
    pub visible: bool,
}

/// Per-element accessibility data, indexed by node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct A11yTree {
    nodes: Vec<A11yNode>,
}

impl A11yTree {
    pub fn node(&self, id: NodeId) -> &A11yNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[A11yNode] {
        &self.nodes
    }

    pub fn with_role<'a>(&'a self, role: &'a str) -> impl Iterator<Item = &'a A11yNode> + 'a {
        self.nodes
            .iter()
            .filter(move |n| n.role.as_deref() == Some(role))
    }
}

pub fn extract_tree(doc: &DomDocument) -> A11yTree {
    let nodes = doc
        .nodes()
        .iter()
        .map(|n| {
            if n.is_root() {
                A11yNode {
                    node_id: n.id(),
                    role: None,
                    name: String::new(),
                    visible: true,
                }
            } else {
                A11yNode {
                    node_id: n.id(),
                    role: implicit_role(n),
                    name: accessible_name(n, doc),
                    visible: doc.is_visible(n.id()),
                }
            }
        })
        .collect();
    A11yTree { nodes }
}

/// Explicit known `role` token first, then the fixed tag mapping.
pub fn implicit_role(node: &ElementNode) -> Option<String> {
    if let Some(explicit) = node.attr("role") {
        if let Some(tok) = explicit
            .split_ascii_whitespace()
            .map(str::to_ascii_lowercase)
            .find(|t| KNOWN_ROLES.contains(&t.as_str()))
        {
            return Some(tok);
        }
    }
    let role = match node.tag() {
        "a" if node.has_attr("href") => "link",
        "button" => "button",
        "input" => {
            let ty = node
                .attr("type")
                .map(|t| t.trim().to_ascii_lowercase())
                .unwrap_or_default();
            match ty.as_str() {
                "button" | "submit" => "button",
                "search" => "searchbox",
                "" | "text" | "email" | "password" => "textbox",
                "checkbox" => "checkbox",
                "radio" => "radio",
                _ => return None,
            }
        }
        "select" => "combobox",
        "textarea" => "textbox",
        "h1" | "h2" | "h3" | "h4" | "h5" | "h6" => "heading",
        "img" if node.attr("alt").is_some_and(|a| !a.trim().is_empty()) => "img",
        "nav" => "navigation",
        "form" => "form",
        "table" => "table",
        "ul" | "ol" => "list",
        "li" => "listitem",
        _ => return None,
    };
    Some(role.to_string())
}

/// First non-empty of: aria-label, aria-labelledby targets, `label[for]`,
/// descendant text, placeholder, title.
pub fn accessible_name(node: &ElementNode, doc: &DomDocument) -> String {
    let from_attr = |name: &str| node.attr(name).map(normalize_whitespace).unwrap_or_default();

    let aria = from_attr("aria-label");
    if !aria.is_empty() {
        return aria;
    }

    if let Some(refs) = node.attr("aria-labelledby") {
        let joined = refs
            .split_ascii_whitespace()
            .filter_map(|id| doc.element_by_id(id))
            .map(|el| doc.normalized_text(el.id()))
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        if !joined.is_empty() {
            return joined;
        }
    }

    if LABELABLE.contains(&node.tag()) {
        if let Some(id) = node.attr("id").filter(|id| !id.is_empty()) {
            let label = doc
                .elements()
                .find(|l| l.tag() == "label" && l.attr("for") == Some(id))
                .map(|l| doc.normalized_text(l.id()))
                .unwrap_or_default();
            if !label.is_empty() {
                return label;
            }
        }
    }

    let text = doc.normalized_text(node.id());
    if !text.is_empty() {
        return text;
    }

    let placeholder = from_attr("placeholder");
    if !placeholder.is_empty() {
        return placeholder;
    }
    from_attr("title")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_document;

    fn first<'a>(doc: &'a DomDocument, tag: &str) -> &'a ElementNode {
        doc.elements().find(|n| n.tag() == tag).unwrap()
    }

    fn role_of(html: &str, tag: &str) -> Option<String> {
        let doc = parse_document(html, "t");
        implicit_role(first(&doc, tag))
    }

    #[test]
    fn implicit_roles() {
        assert_eq!(role_of(r#"<a href="/products">Products</a>"#, "a").as_deref(), Some("link"));
        assert_eq!(role_of("<a>x</a>", "a"), None);
        assert_eq!(role_of(r#"<input type="search">"#, "input").as_deref(), Some("searchbox"));
        assert_eq!(role_of("<input>", "input").as_deref(), Some("textbox"));
        assert_eq!(role_of(r#"<input type="EMAIL">"#, "input").as_deref(), Some("textbox"));
        assert_eq!(role_of(r#"<input type="submit">"#, "input").as_deref(), Some("button"));
        assert_eq!(role_of(r#"<input type="number">"#, "input"), None);
        assert_eq!(role_of("<h4>x</h4>", "h4").as_deref(), Some("heading"));
        assert_eq!(role_of(r#"<img alt="">"#, "img"), None);
        assert_eq!(role_of(r#"<img alt="logo">"#, "img").as_deref(), Some("img"));
        assert_eq!(role_of("<ol><li>x</li></ol>", "li").as_deref(), Some("listitem"));
        assert_eq!(role_of("<div>x</div>", "div"), None);
    }

    #[test]
    fn explicit_role_wins() {
        assert_eq!(role_of(r#"<div role="Button">x</div>"#, "div").as_deref(), Some("button"));
        assert_eq!(role_of(r#"<a href="/" role="tab">x</a>"#, "a").as_deref(), Some("tab"));
        assert_eq!(
            role_of(r#"<a href="/" role="bogus">x</a>"#, "a").as_deref(),
            Some("link")
        );
    }

    #[test]
    fn name_precedence() {
        let doc = parse_document(
            r#"<button aria-label="Close">✕</button>
            <button>Login</button>
            <input id="q" placeholder="Search">
            <span id="l1">Email</span><span id="l2"> address </span>
            <input aria-labelledby="missing l1 l2" placeholder="p">
            <input aria-labelledby="missing" title="T">
            <label for="qty">Quantity:</label><input id="qty" placeholder="n">
            <div title="tip"></div>"#,
            "t",
        );
        let names: Vec<String> = doc
            .elements()
            .filter(|n| matches!(n.tag(), "button" | "input" | "div"))
            .map(|n| accessible_name(n, &doc))
            .collect();
        assert_eq!(
            names,
            ["Close", "Login", "Search", "Email address", "T", "Quantity:", "tip"]
        );
    }

    #[test]
    fn tree_is_deterministic_and_keeps_hidden_nodes() {
        let doc = parse_document(r#"<button hidden>Go</button><p>plain</p>"#, "t");
        let a = extract_tree(&doc);
        assert_eq!(a, extract_tree(&doc));
        let b = a.node(1);
        assert_eq!(b.role.as_deref(), Some("button"));
        assert_eq!(b.name, "Go");
        assert!(!b.visible);
        assert_eq!(a.node(2).role, None);
    }

    #[test]
    fn no_interactive_elements_means_no_roles() {
        let doc = parse_document("<div><span>a</span><p>b</p></div>", "t");
        assert!(extract_tree(&doc).nodes().iter().all(|n| n.role.is_none()));
    }
}
