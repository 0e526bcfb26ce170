//! Shared generators and a brute-force reference matcher for integration tests.
#![allow(dead_code)]

use healkit::dom::{DomDocument, Element, Node, NodeId};
use healkit::engine::{PatternSpec, Registry};
use healkit::selector::{AttrOp, Compound, Locator, SimpleSelector};
use healkit::{extract_tree, A11yTree};
use rand::seq::SliceRandom;
use rand::Rng;

pub const WORDS: &[&str] = &["Add", "to", "cart", "Login", "Products", "Home", "Blue Top", "Search"];
pub const CLASSES: &[&str] = &["btn", "cart", "single-products", "nav", "x-1", "check_out", "css-a1b2c3"];
pub const IDS: &[&str] = &["main", "quantity", "accordian", "product-1", "search_product"];
pub const TESTIDS: &[&str] = &["login-email", "add-to-bag", "tile"];
pub const ARIA: &[&str] = &["Close", "Add to bag", "Search products"];
pub const HREFS: &[&str] = &["/", "/products", "/view_cart", "/product_details/1", "#Women"];
pub const ROLES: &[&str] = &["button", "link", "searchbox", "textbox", "heading", "navigation", "listitem"];

const CONTAINERS: &[&str] = &["div", "section", "nav", "form", "ul"];
const INLINE: &[&str] = &["span", "a", "button", "label", "h2", "p"];
const VOID: &[&str] = &["input", "img"];

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty pool")
}

fn random_attrs<R: Rng>(rng: &mut R, el: &mut Element) {
    if rng.gen_bool(0.25) {
        el.set_attr("id", pick(rng, IDS));
    }
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=3);
        let classes: Vec<String> = CLASSES.choose_multiple(rng, n).map(|c| c.to_string()).collect();
        el.set_classes(&classes);
    }
    if rng.gen_bool(0.15) {
        let attr = if rng.gen_bool(0.5) { "data-testid" } else { "data-qa" };
        el.set_attr(attr, pick(rng, TESTIDS));
    }
    if rng.gen_bool(0.15) {
        el.set_attr("aria-label", pick(rng, ARIA));
    }
    if rng.gen_bool(0.1) {
        el.set_attr("role", pick(rng, ROLES));
    }
    if rng.gen_bool(0.08) {
        el.set_attr("hidden", "");
    }
    if rng.gen_bool(0.05) {
        el.set_attr("style", "display: none");
    }
    match el.tag.as_str() {
        "a" if rng.gen_bool(0.8) => el.set_attr("href", pick(rng, HREFS)),
        "input" => el.set_attr("type", pick(rng, &["text", "search", "email", "submit", "number"])),
        "img" => el.set_attr("alt", pick(rng, WORDS)),
        _ => {}
    }
}

/// An element subtree whose HTML serialization re-parses to the same tree:
/// no adjacent text nodes, voids are childless, inline elements hold only
/// text and spans, `ul` holds only `li`.
fn random_element<R: Rng>(rng: &mut R, tag: &str, budget: &mut usize, depth: usize) -> Element {
    *budget = budget.saturating_sub(1);
    let mut el = Element::new(tag);
    random_attrs(rng, &mut el);
    if VOID.contains(&tag) {
        return el;
    }
    let inline = INLINE.contains(&tag) || tag == "i";
    let n = if depth > 6 { 0 } else { rng.gen_range(0..=4) };
    let mut last_text = false;
    for _ in 0..n {
        if *budget == 0 {
            break;
        }
        if !last_text && tag != "ul" && rng.gen_bool(0.35) {
            el.children.push(Node::Text(pick(rng, WORDS).to_string()));
            last_text = true;
            continue;
        }
        let child_tag = if tag == "ul" {
            "li"
        } else if inline {
            "span"
        } else {
            match rng.gen_range(0..10) {
                0..=3 => pick(rng, CONTAINERS),
                4..=8 => pick(rng, INLINE),
                _ => pick(rng, VOID),
            }
        };
        let child_tag = if tag == "span" && child_tag == "span" && depth > 3 { "i" } else { child_tag };
        el.children.push(Node::Element(random_element(rng, child_tag, budget, depth + 1)));
        last_text = false;
    }
    el
}

/// Random document with at most `max_nodes` elements (excluding the root).
pub fn random_document<R: Rng>(rng: &mut R, max_nodes: usize) -> DomDocument {
    let mut root = Element::new("#document");
    let mut body = Element::new("body");
    let mut budget = max_nodes.saturating_sub(1);
    while budget > 0 && body.children.len() < 8 {
        let tag = pick(rng, CONTAINERS);
        body.children.push(Node::Element(random_element(rng, tag, &mut budget, 1)));
        if rng.gen_bool(0.2) {
            break;
        }
    }
    root.children.push(Node::Element(body));
    DomDocument::from_tree(root, "generated")
}

fn random_simple<R: Rng>(rng: &mut R) -> SimpleSelector {
    let attr = |name: &str, op| SimpleSelector::Attr {
        name: name.to_string(),
        op,
    };
    match rng.gen_range(0..9) {
        0 => SimpleSelector::Id(pick(rng, IDS).into()),
        1 | 2 => SimpleSelector::Class(pick(rng, CLASSES).into()),
        3 => attr(pick(rng, &["data-testid", "data-qa"]), AttrOp::Equals(pick(rng, TESTIDS).into())),
        4 => attr("aria-label", AttrOp::Contains(pick(rng, &["Add", "Close", "bag"]).into())),
        5 => attr("href", AttrOp::Contains(pick(rng, &["/view", "product", "#"]).into())),
        6 => attr(pick(rng, &["hidden", "role", "id"]), AttrOp::Exists),
        7 => attr("class", AttrOp::Contains(pick(rng, &["single", "cart", "css-"]).into())),
        _ => SimpleSelector::HasText(pick(rng, &["add", "CART", "blue top", "login"]).into()),
    }
}

fn random_compound<R: Rng>(rng: &mut R) -> Compound {
    loop {
        let mut c = if rng.gen_bool(0.5) {
            Compound::tag(pick(rng, &["div", "span", "a", "button", "input", "li", "section", "h2"]))
        } else {
            Compound::default()
        };
        for _ in 0..rng.gen_range(0..=2) {
            c = c.with(random_simple(rng));
        }
        if !c.is_empty() {
            return c;
        }
    }
}

pub fn random_locator<R: Rng>(rng: &mut R) -> Locator {
    if rng.gen_bool(0.25) {
        let name = if rng.gen_bool(0.4) { "" } else { pick(rng, WORDS) };
        return Locator::role(pick(rng, ROLES), name);
    }
    let n = rng.gen_range(1..=3);
    Locator::Css((0..n).map(|_| random_compound(rng)).collect())
}

fn some<R: Rng>(rng: &mut R, pool: &[&str], p: f64) -> Vec<String> {
    if !rng.gen_bool(p) {
        return Vec::new();
    }
    let n = rng.gen_range(1..=2);
    pool.choose_multiple(rng, n).map(|s| s.to_string()).collect()
}

/// Random registry; every pattern has at least one candidate.
pub fn random_registry<R: Rng>(rng: &mut R, size: usize) -> Registry {
    let patterns = (0..size)
        .map(|i| loop {
            let mut p = PatternSpec::new(&format!("p{i}"));
            if rng.gen_bool(0.4) {
                p.role = Some(pick(rng, ROLES).to_string());
                p.role_names = some(rng, WORDS, 0.6);
            }
            p.testid = some(rng, TESTIDS, 0.4);
            p.ids = some(rng, IDS, 0.4);
            p.aria = some(rng, &["Close", "Add", "Search products"], 0.3);
            p.href = some(rng, &["/view_cart", "/products", "details"], 0.3);
            p.css = some(rng, &["btn", "cart", "single-products", "div.nav", "section .x-1"], 0.6);
            p.text = some(rng, WORDS, 0.4);
            if p.candidate_count() > 0 {
                break p;
            }
        })
        .collect();
    Registry::new(patterns).expect("generated keys are unique")
}

// ---------------------------------------------------------------------------
// Reference matcher
// ---------------------------------------------------------------------------

struct Flat {
    tag: String,
    attrs: Vec<(String, String)>,
    parent: Option<NodeId>,
    text: String,
}

fn own_text(el: &Element) -> String {
    if el.tag == "script" || el.tag == "style" {
        return String::new();
    }
    el.children
        .iter()
        .map(|c| match c {
            Node::Text(t) => t.clone(),
            Node::Element(e) => own_text(e),
        })
        .collect()
}

fn flatten(el: &Element, parent: Option<NodeId>, out: &mut Vec<Flat>) {
    let id = out.len();
    out.push(Flat {
        tag: el.tag.clone(),
        attrs: el.attributes.clone(),
        parent,
        text: own_text(el).split_whitespace().collect::<Vec<_>>().join(" "),
    });
    for c in &el.children {
        if let Node::Element(e) = c {
            flatten(e, Some(id), out);
        }
    }
}

fn attr<'a>(f: &'a Flat, name: &str) -> Option<&'a str> {
    f.attrs
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(name))
        .map(|(_, v)| v.as_str())
}

fn compound_holds(f: &Flat, c: &Compound) -> bool {
    if f.parent.is_none() {
        return false;
    }
    if c.tag.as_deref().is_some_and(|t| t != f.tag) {
        return false;
    }
    c.simples.iter().all(|s| match s {
        SimpleSelector::Id(v) => attr(f, "id") == Some(v),
        SimpleSelector::Class(v) => attr(f, "class").is_some_and(|cl| cl.split_whitespace().any(|x| x == v)),
        SimpleSelector::Attr { name, op } => match (attr(f, name), op) {
            (None, _) => false,
            (Some(_), AttrOp::Exists) => true,
            (Some(x), AttrOp::Equals(v)) => x == v,
            (Some(x), AttrOp::Contains(v)) => x.contains(v.as_str()),
        },
        SimpleSelector::HasText(v) => f.text.to_lowercase().contains(&v.to_lowercase()),
    })
}

/// Full-tree evaluation, leftmost compound first: the set of elements
/// matching compound `i` that have an ancestor in the set for `i - 1`.
pub fn oracle_match(loc: &Locator, doc: &DomDocument, a11y: &A11yTree) -> Vec<NodeId> {
    let mut flat = Vec::new();
    flatten(&doc.to_tree(), None, &mut flat);
    match loc {
        Locator::Role { role, name } => {
            let want = name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
            (1..flat.len())
                .filter(|&id| {
                    let n = a11y.node(id);
                    n.role.as_deref() == Some(role) && (want.is_empty() || n.name.to_lowercase() == want)
                })
                .collect()
        }
        Locator::Css(chain) => {
            let mut current: Vec<bool> = flat.iter().map(|f| compound_holds(f, &chain[0])).collect();
            for c in &chain[1..] {
                current = (0..flat.len())
                    .map(|id| {
                        if !compound_holds(&flat[id], c) {
                            return false;
                        }
                        let mut up = flat[id].parent;
                        while let Some(p) = up {
                            if current[p] {
                                return true;
                            }
                            up = flat[p].parent;
                        }
                        false
                    })
                    .collect();
            }
            (0..flat.len()).filter(|&i| current[i]).collect()
        }
    }
}

/// Visibility recomputed from attributes along the ancestor path.
pub fn oracle_visible(doc: &DomDocument, id: NodeId) -> bool {
    let mut flat = Vec::new();
    flatten(&doc.to_tree(), None, &mut flat);
    let hides = |f: &Flat| {
        let style: String = attr(f, "style")
            .unwrap_or("")
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_lowercase();
        attr(f, "hidden").is_some()
            || attr(f, "aria-hidden").is_some_and(|v| v.trim().eq_ignore_ascii_case("true"))
            || style.contains("display:none")
            || style.contains("visibility:hidden")
            || (f.tag == "input" && attr(f, "type").is_some_and(|t| t.trim().eq_ignore_ascii_case("hidden")))
    };
    let mut cur = Some(id);
    while let Some(i) = cur {
        if hides(&flat[i]) {
            return false;
        }
        cur = flat[i].parent;
    }
    true
}

pub fn tree(doc: &DomDocument) -> A11yTree {
    extract_tree(doc)
}
