//! Offline stand-in for the target shop: page fixtures with navigation,
//! session and modal semantics, device profiles, and DOM mutation operators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::a11y::extract_tree;
use crate::cache::{save_cache, CacheError};
use crate::dom::{load_document, parse_document, DomDocument, DomError, Element, Node, NodeId};
use crate::engine::{
    discover_pattern, dismiss_modal, run_discovery_passes, DismissalMethod, EngineError,
    Registry,
};
use crate::heal::{HealError, Resolver};
use crate::selector::{parse_locator, Locator, SelectorError};

pub const PAGE_KEYS: [&str; 6] = [
    "home",
    "category",
    "product_detail",
    "cart",
    "checkout",
    "search_results",
];

const BUNDLED_PAGES: [(&str, &str); 6] = [
    ("home", include_str!("../fixtures/site/home.html")),
    ("category", include_str!("../fixtures/site/category.html")),
    ("product_detail", include_str!("../fixtures/site/product_detail.html")),
    ("cart", include_str!("../fixtures/site/cart.html")),
    ("checkout", include_str!("../fixtures/site/checkout.html")),
    ("search_results", include_str!("../fixtures/site/search_results.html")),
];

/// Directory of the bundled fixtures inside the source tree.
pub fn bundled_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/site")
}

#[derive(Debug, Error)]
pub enum SiteError {
    #[error("missing fixture for page {0}")]
    MissingFixture(String),
    #[error("unknown page {0}")]
    UnknownPage(String),
    #[error("click intercepted: {0}")]
    InteractionBlocked(String),
    #[error("no visible element matches {0}")]
    ElementNotFound(String),
    #[error(transparent)]
    Dom(#[from] DomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceName {
    DesktopChrome,
    DesktopSafari,
    Iphone15,
}

impl DeviceName {
    pub const ALL: [DeviceName; 3] = [
        DeviceName::DesktopChrome,
        DeviceName::DesktopSafari,
        DeviceName::Iphone15,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceName::DesktopChrome => "desktop_chrome",
            DeviceName::DesktopSafari => "desktop_safari",
            DeviceName::Iphone15 => "iphone15",
        }
    }
}

impl fmt::Display for DeviceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown device {s:?} (expected desktop_chrome, desktop_safari or iphone15)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeviceProfile {
    pub name: DeviceName,
    pub viewport: (u32, u32),
    pub cart_persists_across_navigation: bool,
}

impl DeviceProfile {
    pub fn named(name: DeviceName) -> Self {
        match name {
            DeviceName::DesktopChrome => Self {
                name,
                viewport: (1440, 900),
                cart_persists_across_navigation: true,
            },
            DeviceName::DesktopSafari => Self {
                name,
                viewport: (1440, 900),
                cart_persists_across_navigation: true,
            },
            DeviceName::Iphone15 => Self {
                name,
                viewport: (393, 852),
                cart_persists_across_navigation: false,
            },
        }
    }

    pub fn all() -> Vec<DeviceProfile> {
        DeviceName::ALL.into_iter().map(Self::named).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SessionState {
    /// `(product_id, quantity)`, quantity always >= 1.
    pub cart_items: Vec<(u32, u32)>,
    pub modal_open: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Navigate(String),
    /// Navigation by URL path, routed to a page key.
    NavigateUrl(String),
    Click(Locator),
    Fill(Locator, String),
    AddToCart(u32),
    DismissModal,
}

/// One simulated browser context. Actions return a new site value.
#[derive(Debug, Clone)]
pub struct VirtualSite {
    pages: Arc<BTreeMap<String, DomDocument>>,
    current_page: String,
    current: DomDocument,
    query: Option<String>,
    session: SessionState,
    profile: DeviceProfile,
    last_dismissal: Option<DismissalMethod>,
}

impl VirtualSite {
    fn from_pages(pages: BTreeMap<String, DomDocument>, profile: DeviceProfile) -> Self {
        let current = pages["home"].clone();
        Self {
            pages: Arc::new(pages),
            current_page: "home".to_string(),
            current,
            query: None,
            session: SessionState::default(),
            profile,
            last_dismissal: None,
        }
    }

    /// Parses `<fixture_dir>/<page>.html` for every required page.
    pub fn load(fixture_dir: &Path, profile: DeviceProfile) -> Result<Self, SiteError> {
        let mut pages = BTreeMap::new();
        for key in PAGE_KEYS {
            let path = fixture_dir.join(format!("{key}.html"));
            if !path.is_file() {
                return Err(SiteError::MissingFixture(key.to_string()));
            }
            pages.insert(key.to_string(), load_document(&path, key)?);
        }
        Ok(Self::from_pages(pages, profile))
    }

    /// The fixture site compiled into the crate.
    pub fn bundled(profile: DeviceProfile) -> Self {
        let pages = BUNDLED_PAGES
            .iter()
            .map(|(k, html)| (k.to_string(), parse_document(html, k)))
            .collect();
        Self::from_pages(pages, profile)
    }

    /// Same site with every page replaced by `f(page_key, doc)`.
    pub fn map_pages(&self, mut f: impl FnMut(&str, &DomDocument) -> DomDocument) -> Self {
        let pages: BTreeMap<String, DomDocument> =
            self.pages.iter().map(|(k, d)| (k.clone(), f(k, d))).collect();
        Self::from_pages(pages, self.profile)
    }

    pub fn with_profile(&self, profile: DeviceProfile) -> Self {
        let mut s = self.clone();
        s.profile = profile;
        s
    }

    pub fn page(&self, key: &str) -> Option<&DomDocument> {
        self.pages.get(key)
    }

    pub fn pages(&self) -> &BTreeMap<String, DomDocument> {
        &self.pages
    }

    pub fn current(&self) -> &DomDocument {
        &self.current
    }

    pub fn current_page(&self) -> &str {
        &self.current_page
    }

    pub fn session(&self) -> &SessionState {
        &self.session
    }

    pub fn profile(&self) -> &DeviceProfile {
        &self.profile
    }

    pub fn last_dismissal(&self) -> Option<DismissalMethod> {
        self.last_dismissal
    }

    /// Structural comparison of the observable state.
    pub fn same_state(&self, other: &VirtualSite) -> bool {
        self.current_page == other.current_page
            && self.current.structurally_eq(&other.current)
            && self.session == other.session
            && self.query == other.query
    }

    pub fn perform(&self, action: &Action) -> Result<VirtualSite, SiteError> {
        let mut next = self.clone();
        match action {
            Action::Navigate(page) => {
                next.ensure_unblocked(&format!("navigate to {page}"))?;
                next.go_to(page, None)?;
            }
            Action::NavigateUrl(url) => {
                next.ensure_unblocked(&format!("navigate to {url}"))?;
                let (page, query) = route(url)?;
                next.go_to(page, query)?;
            }
            Action::AddToCart(pid) => {
                next.ensure_unblocked("add to cart")?;
                next.add_to_cart(*pid);
            }
            Action::DismissModal => {
                let (doc, method) = dismiss_modal(&next.current);
                next.current = doc;
                next.session.modal_open = false;
                next.last_dismissal = Some(method);
            }
            Action::Fill(loc, value) => {
                let target = next.visible_target(loc)?;
                next.ensure_inside_modal_if_open(target, &loc.to_string())?;
                next.current = edit_node(&next.current, target, |el| el.set_attr("value", value));
            }
            Action::Click(loc) => {
                let target = next.visible_target(loc)?;
                next.ensure_inside_modal_if_open(target, &loc.to_string())?;
                next.click(target)?;
            }
        }
        Ok(next)
    }

    fn ensure_unblocked(&self, what: &str) -> Result<(), SiteError> {
        if self.session.modal_open {
            Err(SiteError::InteractionBlocked(format!(
                "{what}: a modal overlay is open"
            )))
        } else {
            Ok(())
        }
    }

    fn ensure_inside_modal_if_open(&self, target: NodeId, what: &str) -> Result<(), SiteError> {
        if !self.session.modal_open {
            return Ok(());
        }
        let doc = &self.current;
        let inside = std::iter::once(doc.node(target))
            .chain(doc.ancestors(target))
            .any(|n| n.has_class("modal"));
        if inside {
            Ok(())
        } else {
            Err(SiteError::InteractionBlocked(format!(
                "{what}: a modal overlay is open"
            )))
        }
    }

    fn visible_target(&self, loc: &Locator) -> Result<NodeId, SiteError> {
        let a11y = extract_tree(&self.current);
        loc.find_visible(&self.current, &a11y)
            .first()
            .copied()
            .ok_or_else(|| SiteError::ElementNotFound(loc.to_string()))
    }

    fn go_to(&mut self, page: &str, query: Option<String>) -> Result<(), SiteError> {
        let doc = self
            .pages
            .get(page)
            .ok_or_else(|| SiteError::UnknownPage(page.to_string()))?;
        self.current = match page {
            "cart" => {
                if !self.profile.cart_persists_across_navigation {
                    self.session.cart_items.clear();
                }
                self.render_cart(&self.session.cart_items)
            }
            "search_results" => filter_search_results(doc, query.as_deref()),
            _ => doc.clone(),
        };
        self.current_page = page.to_string();
        self.query = query;
        Ok(())
    }

    fn add_to_cart(&mut self, pid: u32) {
        self.add_quantity(pid, 1);
    }

    fn add_quantity(&mut self, pid: u32, qty: u32) {
        let qty = qty.max(1);
        match self.session.cart_items.iter_mut().find(|(p, _)| *p == pid) {
            Some(item) => item.1 += qty,
            None => self.session.cart_items.push((pid, qty)),
        }
        self.session.modal_open = true;
        self.current = inject_cart_modal(&self.current);
    }

    fn click(&mut self, target: NodeId) -> Result<(), SiteError> {
        let doc = self.current.clone();
        let chain: Vec<&crate::dom::ElementNode> = std::iter::once(doc.node(target))
            .chain(doc.ancestors(target))
            .collect();

        if let Some(el) = chain.iter().find(|n| {
            n.has_attr("data-product-id") && (n.has_class("cart") || n.has_class("add-to-cart"))
        }) {
            self.ensure_unblocked("add to cart")?;
            let pid = el.attr("data-product-id").and_then(|v| v.parse().ok()).unwrap_or(1);
            let qty = doc
                .element_by_id("quantity")
                .and_then(|q| q.attr("value"))
                .and_then(|v| v.trim().parse().ok())
                .filter(|_| self.current_page == "product_detail")
                .unwrap_or(1);
            self.add_quantity(pid, qty);
            return Ok(());
        }
        if let Some(el) = chain.iter().find(|n| n.has_class("cart_quantity_delete")) {
            if let Some(pid) = el.attr("data-product-id").and_then(|v| v.parse::<u32>().ok()) {
                self.session.cart_items.retain(|(p, _)| *p != pid);
                self.current = self.render_cart(&self.session.cart_items);
            }
            return Ok(());
        }
        if chain
            .iter()
            .any(|n| n.has_class("close-modal") || n.attr("data-dismiss") == Some("modal"))
        {
            let (d, method) = dismiss_modal(&self.current);
            self.current = d;
            self.session.modal_open = false;
            self.last_dismissal = Some(method);
            return Ok(());
        }
        if let Some(el) = chain
            .iter()
            .find(|n| n.attr("data-toggle") == Some("collapse"))
        {
            if let Some(id) = el.attr("href").and_then(|h| h.strip_prefix('#')) {
                let id = id.to_string();
                self.current = self.current.edited(|root| {
                    if let Some(panel) = root.find_mut(&|e| e.attr("id") == Some(id.as_str())) {
                        if !panel.remove_attr("hidden") {
                            panel.set_attr("hidden", "");
                        }
                    }
                });
            }
            return Ok(());
        }
        if let Some(href) = chain
            .iter()
            .find(|n| n.tag() == "a")
            .and_then(|n| n.attr("href"))
            .filter(|h| h.starts_with('/'))
        {
            // following a link out of the modal leaves the page, and the overlay with it
            self.session.modal_open = false;
            let (page, query) = route(href)?;
            self.go_to(page, query)?;
        }
        Ok(())
    }

    /// The cart page populated from `items`; an empty cart shows the empty notice.
    pub fn render_cart(&self, items: &[(u32, u32)]) -> DomDocument {
        let template = &self.pages["cart"];
        template.edited(|root| {
            root.remove_where(&|e: &Element| {
                e.tag == "tr"
                    && e.attr("id")
                        .and_then(|id| id.strip_prefix("product-"))
                        .and_then(|n| n.parse::<u32>().ok())
                        .is_some_and(|pid| !items.iter().any(|(p, _)| *p == pid))
            });
            root.walk_mut(&mut |e| {
                let row_pid = e
                    .attr("id")
                    .and_then(|id| id.strip_prefix("product-"))
                    .and_then(|n| n.parse::<u32>().ok());
                if let (Some(pid), "tr") = (row_pid, e.tag.as_str()) {
                    let qty = items.iter().find(|(p, _)| *p == pid).map_or(1, |i| i.1);
                    if let Some(q) = e.find_mut(&|c| c.tag == "button" && c.attr("data-qty").is_some()) {
                        q.set_text(&qty.to_string());
                    }
                }
                if e.attr("id") == Some("empty_cart") {
                    if items.is_empty() {
                        e.remove_attr("hidden");
                    } else {
                        e.set_attr("hidden", "");
                    }
                }
            });
        })
    }
}

fn edit_node(doc: &DomDocument, target: NodeId, f: impl FnOnce(&mut Element)) -> DomDocument {
    let mut f = Some(f);
    doc.edited(|root| {
        walk_indexed(root, &mut 0, &mut |idx, el| {
            if idx == target {
                if let Some(f) = f.take() {
                    f(el);
                }
            }
        });
    })
}

/// Pre-order walk yielding the same indices as [`NodeId`]s of the compiled document.
fn walk_indexed(el: &mut Element, counter: &mut usize, f: &mut dyn FnMut(usize, &mut Element)) {
    let idx = *counter;
    *counter += 1;
    f(idx, el);
    for child in &mut el.children {
        if let Node::Element(c) = child {
            walk_indexed(c, counter, f);
        }
    }
}

/// URL path to page key, plus the search query if any.
pub fn route(url: &str) -> Result<(&'static str, Option<String>), SiteError> {
    let (path, query) = match url.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (url, None),
    };
    let search = query.and_then(|q| {
        q.split('&')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == "search")
            .map(|(_, v)| v.replace('+', " "))
    });
    let path = path.trim_end_matches('/');
    let page = match path {
        "" => "home",
        "/products" if search.is_some() => "search_results",
        "/products" => "category",
        "/view_cart" => "cart",
        "/checkout" | "/login" => "checkout",
        p if p.starts_with("/category_products/") => "category",
        p if p.starts_with("/product_details/") => "product_detail",
        _ => return Err(SiteError::UnknownPage(url.to_string())),
    };
    Ok((page, search))
}

fn filter_search_results(doc: &DomDocument, query: Option<&str>) -> DomDocument {
    let Some(q) = query.map(str::to_lowercase).filter(|q| !q.is_empty()) else {
        return doc.clone();
    };
    let drop: Vec<NodeId> = doc
        .elements()
        .filter(|n| n.has_attr("data-search-item"))
        .filter(|n| !doc.normalized_text(n.id()).to_lowercase().contains(&q))
        .map(|n| n.id())
        .collect();
    let mut counter = 0;
    doc.edited(|root| {
        remove_indexed(root, &mut counter, &drop);
    })
}

fn remove_indexed(el: &mut Element, counter: &mut usize, drop: &[NodeId]) {
    *counter += 1;
    let mut kept = Vec::with_capacity(el.children.len());
    for child in std::mem::take(&mut el.children) {
        match child {
            Node::Element(mut c) => {
                let idx = *counter;
                if drop.contains(&idx) {
                    *counter += subtree_size(&c);
                } else {
                    remove_indexed(&mut c, counter, drop);
                    kept.push(Node::Element(c));
                }
            }
            text => kept.push(text),
        }
    }
    el.children = kept;
}

fn subtree_size(el: &Element) -> usize {
    1 + el
        .children
        .iter()
        .map(|c| match c {
            Node::Element(e) => subtree_size(e),
            Node::Text(_) => 0,
        })
        .sum::<usize>()
}

const CART_MODAL: &str = r#"<div class="modal fade show" id="cartModal" role="dialog"><div class="modal-dialog modal-confirm"><div class="modal-content"><div class="modal-header"><h4 class="modal-title w-100">Added!</h4></div><div class="modal-body"><p class="text-center">Your product has been added to cart.</p><p class="text-center"><a href="/view_cart"><u>View Cart</u></a></p></div><div class="modal-footer"><button class="btn btn-success close-modal btn-block" data-dismiss="modal">Continue Shopping</button></div></div></div></div><div class="modal-backdrop fade show"></div>"#;

/// Adds the confirmation modal and backdrop, and puts the body in modal state.
fn inject_cart_modal(doc: &DomDocument) -> DomDocument {
    let modal = parse_document(CART_MODAL, "modal").to_tree().children;
    doc.edited(|root| {
        let target = match root.find_mut(&|e| e.tag == "body") {
            Some(body) => {
                let mut classes = body.classes();
                if !classes.iter().any(|c| c == "modal-open") {
                    classes.push("modal-open".into());
                }
                body.set_classes(&classes);
                body.set_attr("style", "overflow: hidden");
                body
            }
            None => root,
        };
        target.children.extend(modal);
    })
}

// ---------------------------------------------------------------------------
// Mutations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MutationOp {
    /// Renames one class, or every class when `from` is absent. Without `to`
    /// the new name is the old one plus a seed-derived suffix.
    RenameClass {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        to: Option<String>,
    },
    RemoveAttribute {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
    ChangeText {
        target: String,
        text: String,
    },
    InsertWrapper {
        target: String,
        #[serde(default = "default_wrapper_tag")]
        tag: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<String>,
    },
    RegenerateSyntheticClasses,
}

fn default_wrapper_tag() -> String {
    "div".to_string()
}

#[derive(Debug, Clone)]
pub struct MutationResult {
    pub doc: DomDocument,
    /// Elements changed; zero means the op's targets were absent.
    pub touched: usize,
}

impl MutationResult {
    pub fn warning(&self) -> bool {
        self.touched == 0
    }
}

#[derive(Debug, Error)]
pub enum MutationError {
    #[error("invalid target selector {selector:?}: {source}")]
    Target {
        selector: String,
        #[source]
        source: SelectorError,
    },
    #[error("invalid mutation list: {0}")]
    InvalidList(String),
}

pub fn parse_mutations(json: &str) -> Result<Vec<MutationOp>, MutationError> {
    serde_json::from_str(json).map_err(|e| MutationError::InvalidList(e.to_string()))
}

fn synthetic_class_pattern() -> Regex {
    Regex::new(r"^css-[a-z0-9]{5,}$|__[0-9a-fA-F]{4,}$").expect("valid regex")
}

fn targets(doc: &DomDocument, selector: &str) -> Result<Vec<NodeId>, MutationError> {
    let loc = parse_locator(selector).map_err(|source| MutationError::Target {
        selector: selector.to_string(),
        source,
    })?;
    Ok(loc.find(doc, &extract_tree(doc)))
}

fn token(rng: &mut ChaCha8Rng, len: usize, alphabet: &[u8]) -> String {
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char)
        .collect()
}

const HEX: &[u8] = b"0123456789abcdef";
const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

/// Applies one op. Deterministic for `(doc, op, seed)`.
pub fn apply_mutation(
    doc: &DomDocument,
    op: &MutationOp,
    seed: u64,
) -> Result<MutationResult, MutationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut touched = 0;
    let out = match op {
        MutationOp::RenameClass { from, to } => {
            let mut renamed: HashMap<String, String> = HashMap::new();
            doc.edited(|root| {
                root.walk_mut(&mut |el| {
                    let classes = el.classes();
                    if classes.is_empty() {
                        return;
                    }
                    let mut changed = false;
                    let next: Vec<String> = classes
                        .into_iter()
                        .map(|c| {
                            if from.as_ref().is_some_and(|f| *f != c) {
                                return c;
                            }
                            changed = true;
                            renamed
                                .entry(c.clone())
                                .or_insert_with(|| match to {
                                    Some(t) => t.clone(),
                                    None => format!("{c}-{}", token(&mut rng, 5, HEX)),
                                })
                                .clone()
                        })
                        .collect();
                    if changed {
                        touched += 1;
                        el.set_classes(&next);
                    }
                });
            })
        }
        MutationOp::RemoveAttribute { name, target } => {
            let chosen = target.as_deref().map(|t| targets(doc, t)).transpose()?;
            doc.edited(|root| {
                walk_indexed(root, &mut 0, &mut |idx, el| {
                    if idx == 0 || chosen.as_ref().is_some_and(|c| !c.contains(&idx)) {
                        return;
                    }
                    if el.remove_attr(name) {
                        touched += 1;
                    }
                });
            })
        }
        MutationOp::ChangeText { target, text } => {
            let chosen = targets(doc, target)?;
            doc.edited(|root| {
                walk_indexed(root, &mut 0, &mut |idx, el| {
                    if chosen.contains(&idx) {
                        el.set_text(text);
                        touched += 1;
                    }
                });
            })
        }
        MutationOp::InsertWrapper { target, tag, class } => {
            let chosen = targets(doc, target)?;
            touched = chosen.len();
            doc.edited(|root| wrap_indexed(root, &mut 0, &chosen, tag, class.as_deref()))
        }
        MutationOp::RegenerateSyntheticClasses => {
            let synthetic = synthetic_class_pattern();
            let mut renamed: HashMap<String, String> = HashMap::new();
            doc.edited(|root| {
                root.walk_mut(&mut |el| {
                    let classes = el.classes();
                    if !classes.iter().any(|c| synthetic.is_match(c)) {
                        return;
                    }
                    touched += 1;
                    let next: Vec<String> = classes
                        .into_iter()
                        .map(|c| {
                            if !synthetic.is_match(&c) {
                                return c;
                            }
                            renamed
                                .entry(c.clone())
                                .or_insert_with(|| regenerate(&c, &mut rng))
                                .clone()
                        })
                        .collect();
                    el.set_classes(&next);
                });
            })
        }
    };
    Ok(MutationResult { doc: out, touched })
}

fn regenerate(class: &str, rng: &mut ChaCha8Rng) -> String {
    if let Some(rest) = class.strip_prefix("css-") {
        return format!("css-{}", token(rng, rest.len().max(5), ALNUM));
    }
    let (stem, suffix) = class.rsplit_once("__").expect("synthetic class has a __ suffix");
    format!("{stem}__{}", token(rng, suffix.len(), HEX))
}

fn wrap_indexed(el: &mut Element, counter: &mut usize, chosen: &[NodeId], tag: &str, class: Option<&str>) {
    *counter += 1;
    for child in &mut el.children {
        if let Node::Element(c) = child {
            let idx = *counter;
            wrap_indexed(c, counter, chosen, tag, class);
            if chosen.contains(&idx) {
                let mut wrapper = Element::new(tag);
                if let Some(cl) = class {
                    wrapper.set_attr("class", cl);
                }
                let inner = std::mem::replace(c, Element::new(tag));
                wrapper.children.push(Node::Element(inner));
                *c = wrapper;
            }
        }
    }
}

/// Applies ops in order, feeding each a distinct seed.
pub fn apply_mutations(
    doc: &DomDocument,
    ops: &[MutationOp],
    seed: u64,
) -> Result<MutationResult, MutationError> {
    let mut current = MutationResult {
        doc: doc.clone(),
        touched: 0,
    };
    for (i, op) in ops.iter().enumerate() {
        let r = apply_mutation(&current.doc, op, seed.wrapping_add(i as u64))?;
        current = MutationResult {
            doc: r.doc,
            touched: current.touched + r.touched,
        };
    }
    Ok(current)
}

// ---------------------------------------------------------------------------
// Survival benchmark
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("trials must be >= 1")]
    NoTrials,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Heal(#[from] HealError),
    #[error("scratch directory: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TierSurvival {
    pub total: usize,
    pub survived: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSurvival {
    pub trial: usize,
    pub key: String,
    pub page: String,
    pub selector: String,
    pub tier: u8,
    pub survived: bool,
    /// Direct re-discovery on the mutated page found something.
    pub alternative_exists: bool,
    pub resolved_after_heal: bool,
    pub healed_selector: Option<String>,
    pub healed_tier: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalReport {
    pub trials: usize,
    pub seed: u64,
    pub per_tier: BTreeMap<u8, TierSurvival>,
    pub post_heal_pass_fraction: f64,
    /// Post-heal pass fraction restricted to patterns with a surviving alternative.
    pub post_heal_with_alternative: f64,
    pub median_heal_ms: Option<f64>,
    pub patterns: Vec<PatternSurvival>,
}

impl SurvivalReport {
    pub fn tier_survival(&self, tier: u8) -> Option<f64> {
        self.per_tier.get(&tier).map(|t| t.fraction)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn fraction(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Mutation seed used for one bench trial.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add((trial as u64) << 16)
}

/// Discover on the pristine site, mutate every page, re-match every cached
/// selector, then run self-healing resolution against the mutated pages.
pub fn survival_bench(
    site: &VirtualSite,
    registry: &Registry,
    ops: &[MutationOp],
    trials: usize,
    seed: u64,
) -> Result<SurvivalReport, BenchError> {
    if trials == 0 {
        return Err(BenchError::NoTrials);
    }
    let registry = Arc::new(registry.clone());
    let mut per_tier: BTreeMap<u8, TierSurvival> = BTreeMap::new();
    let mut patterns = Vec::new();
    let mut heal_ms = Vec::new();

    for trial in 0..trials {
        let trial_seed = trial_seed(seed, trial);
        let run = run_discovery_passes(site, &registry, Default::default())?;
        let scratch = tempfile::tempdir()?;
        let cache_path = scratch.path().join("global_locators.json");
        save_cache(&run.cache, &cache_path)?;
        let resolver = Resolver::new(&cache_path, registry.clone(), scratch.path().join("diag"));

        let mut mutated: BTreeMap<&str, DomDocument> = BTreeMap::new();
        for (page, doc) in &run.pages {
            mutated.insert(page.as_str(), apply_mutations(doc, ops, trial_seed)?.doc);
        }

        for (key, outcome) in &run.report.per_pattern {
            let crate::engine::PatternOutcome::Discovered {
                page, selector, tier, ..
            } = outcome
            else {
                continue;
            };
            let doc = &mutated[page.as_str()];
            let a11y = extract_tree(doc);
            let loc = parse_locator(selector).expect("discovered selectors parse");
            let survived = !loc.find_visible(doc, &a11y).is_empty();

            let slot = per_tier.entry(*tier).or_default();
            slot.total += 1;
            slot.survived += usize::from(survived);

            let pattern = registry.get(key).expect("reported key is registered");
            let alternative_exists = discover_pattern(pattern, doc)?.record().is_some();

            let started = Instant::now();
            let (resolved, healed_selector, healed_tier) = match resolver.resolve(key, doc) {
                Ok(r) => {
                    if let Some(ev) = &r.heal {
                        heal_ms.push(started.elapsed().as_secs_f64() * 1000.0);
                        (true, ev.recovered_selector.clone(), ev.recovered_tier)
                    } else {
                        (true, None, None)
                    }
                }
                Err(HealError::ResolutionFailed(_)) => (false, None, None),
                Err(e) => return Err(e.into()),
            };
            patterns.push(PatternSurvival {
                trial,
                key: key.clone(),
                page: page.clone(),
                selector: selector.clone(),
                tier: *tier,
                survived,
                alternative_exists,
                resolved_after_heal: resolved,
                healed_selector,
                healed_tier,
            });
        }
    }

    for t in per_tier.values_mut() {
        t.fraction = fraction(t.survived, t.total);
    }
    let resolved = patterns.iter().filter(|p| p.resolved_after_heal).count();
    let with_alt: Vec<&PatternSurvival> = patterns.iter().filter(|p| p.alternative_exists).collect();
    let with_alt_resolved = with_alt.iter().filter(|p| p.resolved_after_heal).count();
    heal_ms.sort_by(f64::total_cmp);
    let median_heal_ms = match heal_ms.len() {
        0 => None,
        n if n % 2 == 1 => Some(heal_ms[n / 2]),
        n => Some((heal_ms[n / 2 - 1] + heal_ms[n / 2]) / 2.0),
    };
    Ok(SurvivalReport {
        trials,
        seed,
        per_tier,
        post_heal_pass_fraction: fraction(resolved, patterns.len()),
        post_heal_with_alternative: fraction(with_alt_resolved, with_alt.len()),
        median_heal_ms,
        patterns,
    })
}
