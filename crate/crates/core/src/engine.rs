//! Selector discovery: the ten-tier priority order, the pattern registry,
//! per-pattern discovery, the multi-page discovery passes and modal dismissal.

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::a11y::{extract_tree, A11yTree};
use crate::cache::{LocatorCache, LocatorRecord};
use crate::dom::{DomDocument, Element};
use crate::selector::{
    is_ident_char, parse_locator, AttrOp, Compound, Locator, SimpleSelector,
};
use crate::sitelab::{Action, SiteError, VirtualSite, PAGE_KEYS};

pub const BUNDLED_REGISTRY: &str = include_str!("../fixtures/registry.json");

/// Product added to the cart before the cart pass.
pub const DISCOVERY_PRODUCT: u32 = 1;
/// Query used for the search pass.
pub const DISCOVERY_SEARCH_URL: &str = "/products?search=top";

/// Dismissal controls tried in order before forced removal.
pub const MODAL_DISMISS_SELECTORS: &[&str] = &[
    ".modal .close-modal",
    "[data-dismiss=modal]",
    r#"button:has-text("Continue Shopping")"#,
];

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("pattern {0} has no candidates in any tier")]
    EmptyPattern(String),
    #[error("pass {pass} blocked: {source}")]
    PassBlocked {
        pass: String,
        #[source]
        source: SiteError,
    },
    #[error("registry: {0}")]
    Registry(String),
}

/// Priority tiers, most robust first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocatorTier {
    RoleName = 1,
    RoleOnly = 2,
    TestId = 3,
    HtmlId = 4,
    AriaExact = 5,
    AriaContains = 6,
    HrefFragment = 7,
    CssExact = 8,
    CssContains = 9,
    VisibleText = 10,
}

impl LocatorTier {
    pub const ALL: [LocatorTier; 10] = [
        LocatorTier::RoleName,
        LocatorTier::RoleOnly,
        LocatorTier::TestId,
        LocatorTier::HtmlId,
        LocatorTier::AriaExact,
        LocatorTier::AriaContains,
        LocatorTier::HrefFragment,
        LocatorTier::CssExact,
        LocatorTier::CssContains,
        LocatorTier::VisibleText,
    ];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn from_ordinal(n: u8) -> Option<Self> {
        Self::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn strategy(self) -> &'static str {
        match self {
            LocatorTier::RoleName => "role_name",
            LocatorTier::RoleOnly => "role_only",
            LocatorTier::TestId => "testid",
            LocatorTier::HtmlId => "html_id",
            LocatorTier::AriaExact => "aria_exact",
            LocatorTier::AriaContains => "aria_contains",
            LocatorTier::HrefFragment => "href_fragment",
            LocatorTier::CssExact => "css_exact",
            LocatorTier::CssContains => "css_contains",
            LocatorTier::VisibleText => "visible_text",
        }
    }

    pub fn from_strategy(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.strategy() == s)
    }

    /// Best-guess tier for a hand-written selector, from its leading constraint.
    pub fn infer(loc: &Locator) -> LocatorTier {
        let chain = match loc {
            Locator::Role { name, .. } if name.is_empty() => return LocatorTier::RoleOnly,
            Locator::Role { .. } => return LocatorTier::RoleName,
            Locator::Css(chain) => chain,
        };
        let simples = chain.iter().flat_map(|c| c.simples.iter());
        let mut tier: Option<LocatorTier> = None;
        for s in simples {
            let t = match s {
                SimpleSelector::Attr { name, .. } if name == "data-testid" || name == "data-qa" => {
                    LocatorTier::TestId
                }
                SimpleSelector::Id(_) => LocatorTier::HtmlId,
                SimpleSelector::Attr { name, op: AttrOp::Contains(_) } if name == "aria-label" => {
                    LocatorTier::AriaContains
                }
                SimpleSelector::Attr { name, .. } if name == "aria-label" => LocatorTier::AriaExact,
                SimpleSelector::Attr { name, .. } if name == "href" => LocatorTier::HrefFragment,
                SimpleSelector::Attr { name, op: AttrOp::Contains(_) } if name == "class" => {
                    LocatorTier::CssContains
                }
                SimpleSelector::HasText(_) => LocatorTier::VisibleText,
                _ => continue,
            };
            tier = Some(tier.map_or(t, |cur| cur.min(t)));
        }
        tier.unwrap_or(LocatorTier::CssExact)
    }
}

impl fmt::Display for LocatorTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.strategy(), self.ordinal())
    }
}

/// A named element archetype with ordered candidate values per tier family.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSpec {
    #[serde(skip)]
    pub key: String,
    /// Page whose pass discovers this pattern. `None` tries every pass in order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub page: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    pub role_names: Vec<String>,
    pub testid: Vec<String>,
    pub ids: Vec<String>,
    pub aria: Vec<String>,
    pub href: Vec<String>,
    pub css: Vec<String>,
    pub text: Vec<String>,
}

impl PatternSpec {
    pub fn new(key: &str) -> Self {
        Self {
            key: key.to_string(),
            ..Self::default()
        }
    }

    pub fn candidate_count(&self) -> usize {
        LocatorTier::ALL
            .iter()
            .map(|&t| synthesize_candidates(self, t).len())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Registry {
    patterns: Vec<PatternSpec>,
}

#[derive(Serialize, Deserialize)]
struct RegistryWire {
    patterns: IndexMap<String, PatternSpec>,
}

impl Registry {
    pub fn new(patterns: Vec<PatternSpec>) -> Result<Self, EngineError> {
        let mut seen = std::collections::HashSet::new();
        for p in &patterns {
            if !seen.insert(p.key.clone()) {
                return Err(EngineError::Registry(format!("duplicate key {}", p.key)));
            }
            if let Some(page) = &p.page {
                if !PAGE_KEYS.contains(&page.as_str()) {
                    return Err(EngineError::Registry(format!("{}: unknown page {page}", p.key)));
                }
            }
        }
        Ok(Self { patterns })
    }

    pub fn from_json(json: &str) -> Result<Self, EngineError> {
        let wire: RegistryWire =
            serde_json::from_str(json).map_err(|e| EngineError::Registry(e.to_string()))?;
        let patterns = wire
            .patterns
            .into_iter()
            .map(|(key, mut p)| {
                p.key = key;
                p
            })
            .collect();
        Self::new(patterns)
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Registry(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    /// The 17-pattern registry authored against the bundled fixture site.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_REGISTRY).expect("bundled registry is valid")
    }

    pub fn to_json(&self) -> String {
        let wire = RegistryWire {
            patterns: self
                .patterns
                .iter()
                .map(|p| (p.key.clone(), p.clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&wire).expect("registry serializes")
    }

    pub fn get(&self, key: &str) -> Option<&PatternSpec> {
        self.patterns.iter().find(|p| p.key == key)
    }

    pub fn patterns(&self) -> &[PatternSpec] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Sub-registry with only the listed keys, in registry order.
    pub fn subset(&self, keys: &[&str]) -> Registry {
        Registry {
            patterns: self
                .patterns
                .iter()
                .filter(|p| keys.contains(&p.key.as_str()))
                .cloned()
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Candidate synthesis
// ---------------------------------------------------------------------------

fn attr(name: &str, op: AttrOp) -> SimpleSelector {
    SimpleSelector::Attr {
        name: name.to_string(),
        op,
    }
}

fn is_plain_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(is_ident_char)
}

/// Candidate locators for one tier, in the pattern's list order, deduplicated.
pub fn synthesize_candidates(pattern: &PatternSpec, tier: LocatorTier) -> Vec<Locator> {
    let mut out: Vec<Locator> = Vec::new();
    let mut push = |loc: Locator| {
        if !out.contains(&loc) {
            out.push(loc);
        }
    };
    match tier {
        LocatorTier::RoleName => {
            if let Some(role) = &pattern.role {
                for name in pattern.role_names.iter().filter(|n| !n.trim().is_empty()) {
                    push(Locator::role(role, name));
                }
            }
        }
        LocatorTier::RoleOnly => {
            // a pattern that names its element does not accept any element of the role
            if let Some(role) = pattern.role.as_ref().filter(|_| pattern.role_names.is_empty()) {
                push(Locator::role(role, ""));
            }
        }
        LocatorTier::TestId => {
            for v in &pattern.testid {
                push(Locator::compound(
                    Compound::default().with(attr("data-testid", AttrOp::Equals(v.clone()))),
                ));
                push(Locator::compound(
                    Compound::default().with(attr("data-qa", AttrOp::Equals(v.clone()))),
                ));
            }
        }
        LocatorTier::HtmlId => {
            for v in &pattern.ids {
                if is_plain_ident(v) {
                    push(Locator::compound(Compound::default().with(SimpleSelector::Id(v.clone()))));
                } else if let Some(loc) = parse_locator(v).ok().filter(|_| v.contains('#')) {
                    push(loc);
                } else {
                    push(Locator::compound(
                        Compound::default().with(attr("id", AttrOp::Equals(v.clone()))),
                    ));
                }
            }
        }
        LocatorTier::AriaExact => {
            for v in &pattern.aria {
                push(Locator::compound(
                    Compound::default().with(attr("aria-label", AttrOp::Equals(v.clone()))),
                ));
            }
        }
        LocatorTier::AriaContains => {
            for v in &pattern.aria {
                push(Locator::compound(
                    Compound::default().with(attr("aria-label", AttrOp::Contains(v.clone()))),
                ));
            }
        }
        LocatorTier::HrefFragment => {
            for v in &pattern.href {
                push(Locator::compound(
                    Compound::tag("a").with(attr("href", AttrOp::Contains(v.clone()))),
                ));
            }
        }
        LocatorTier::CssExact => {
            for v in &pattern.css {
                if is_plain_ident(v) {
                    push(Locator::compound(
                        Compound::default().with(SimpleSelector::Class(v.clone())),
                    ));
                } else if let Ok(loc) = parse_locator(v) {
                    push(loc);
                }
            }
        }
        LocatorTier::CssContains => {
            for v in &pattern.css {
                if is_plain_ident(v) {
                    push(Locator::compound(
                        Compound::default().with(attr("class", AttrOp::Contains(v.clone()))),
                    ));
                } else if let Ok(Locator::Css(chain)) = parse_locator(v) {
                    let last = chain.last().expect("chain is non-empty");
                    for s in &last.simples {
                        if let SimpleSelector::Class(c) = s {
                            let mut compound = Compound {
                                tag: last.tag.clone(),
                                simples: Vec::new(),
                            };
                            compound.simples.push(attr("class", AttrOp::Contains(c.clone())));
                            push(Locator::compound(compound));
                        }
                    }
                }
            }
        }
        LocatorTier::VisibleText => {
            let tag = match pattern.role.as_deref() {
                Some("button") => Some("button"),
                Some("link") => Some("a"),
                _ => None,
            };
            for v in pattern.text.iter().filter(|t| !t.trim().is_empty()) {
                if v.contains(":has-text(") {
                    if let Ok(loc) = parse_locator(v) {
                        push(loc);
                        continue;
                    }
                }
                let compound = match tag {
                    Some(t) => Compound::tag(t),
                    None => Compound::default(),
                };
                push(Locator::compound(compound.with(SimpleSelector::HasText(v.clone()))));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Discovery
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discovery {
    Found(LocatorRecord),
    NotFound {
        candidates_tried: usize,
        /// Some candidate matched, but only invisible elements.
        hidden_matches: bool,
    },
}

impl Discovery {
    pub fn record(&self) -> Option<&LocatorRecord> {
        match self {
            Discovery::Found(r) => Some(r),
            Discovery::NotFound { .. } => None,
        }
    }
}

/// Walks tiers 1..=10 and returns the first candidate that matches a visible element.
pub fn discover_pattern(pattern: &PatternSpec, doc: &DomDocument) -> Result<Discovery, EngineError> {
    discover_pattern_in(pattern, doc, &extract_tree(doc))
}

pub fn discover_pattern_in(
    pattern: &PatternSpec,
    doc: &DomDocument,
    a11y: &A11yTree,
) -> Result<Discovery, EngineError> {
    let mut tried = 0;
    let mut hidden_matches = false;
    for tier in LocatorTier::ALL {
        for candidate in synthesize_candidates(pattern, tier) {
            tried += 1;
            let all = candidate.find(doc, a11y);
            let visible = all.iter().filter(|&&id| a11y.node(id).visible).count();
            if visible > 0 {
                return Ok(Discovery::Found(LocatorRecord::new(
                    &pattern.key,
                    candidate.to_string(),
                    tier,
                    visible,
                )));
            }
            hidden_matches |= !all.is_empty();
        }
    }
    if tried == 0 {
        return Err(EngineError::EmptyPattern(pattern.key.clone()));
    }
    Ok(Discovery::NotFound {
        candidates_tried: tried,
        hidden_matches,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PatternOutcome {
    Discovered {
        page: String,
        selector: String,
        tier: u8,
        strategy: String,
        match_count: usize,
    },
    NotFound {
        reason: String,
        candidates_tried: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscoveryReport {
    pub attempted: usize,
    pub discovered: usize,
    pub per_pattern: IndexMap<String, PatternOutcome>,
}

impl DiscoveryReport {
    pub fn coverage(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.discovered as f64 / self.attempted as f64
        }
    }

    pub fn tier_of(&self, key: &str) -> Option<u8> {
        match self.per_pattern.get(key)? {
            PatternOutcome::Discovered { tier, .. } => Some(*tier),
            PatternOutcome::NotFound { .. } => None,
        }
    }

    pub fn selector_of(&self, key: &str) -> Option<&str> {
        match self.per_pattern.get(key)? {
            PatternOutcome::Discovered { selector, .. } => Some(selector),
            PatternOutcome::NotFound { .. } => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Result of [`run_discovery_passes`]: the report, the updated cache, and the
/// page each discovered pattern was found on.
#[derive(Debug, Clone)]
pub struct DiscoveryRun {
    pub report: DiscoveryReport,
    pub cache: LocatorCache,
    pub pages: IndexMap<String, DomDocument>,
}

/// Home, category, product detail, cart (after add-to-cart and modal
/// dismissal), checkout, then search via URL navigation.
pub fn run_discovery_passes(
    site: &VirtualSite,
    registry: &Registry,
    cache: LocatorCache,
) -> Result<DiscoveryRun, EngineError> {
    let blocked = |pass: &str| {
        let pass = pass.to_string();
        move |source| EngineError::PassBlocked { pass, source }
    };

    let mut pages: IndexMap<String, DomDocument> = IndexMap::new();
    let home = site.perform(&Action::Navigate("home".into())).map_err(blocked("home"))?;
    pages.insert("home".into(), home.current().clone());
    let category = home
        .perform(&Action::Navigate("category".into()))
        .map_err(blocked("category"))?;
    pages.insert("category".into(), category.current().clone());
    let pdp = category
        .perform(&Action::Navigate("product_detail".into()))
        .map_err(blocked("product_detail"))?;
    pages.insert("product_detail".into(), pdp.current().clone());

    let added = pdp
        .perform(&Action::AddToCart(DISCOVERY_PRODUCT))
        .map_err(blocked("cart"))?;
    let dismissed = added.perform(&Action::DismissModal).map_err(blocked("cart"))?;
    let cart = dismissed
        .perform(&Action::Navigate("cart".into()))
        .map_err(blocked("cart"))?;
    let cart_doc = if cart.profile().cart_persists_across_navigation {
        cart.current().clone()
    } else {
        // the session was dropped on navigation; discovery needs the populated
        // page structure, which is identical across profiles
        cart.render_cart(&[(DISCOVERY_PRODUCT, 1)])
    };
    pages.insert("cart".into(), cart_doc);

    let checkout = cart
        .perform(&Action::Navigate("checkout".into()))
        .map_err(blocked("checkout"))?;
    pages.insert("checkout".into(), checkout.current().clone());
    let search = checkout
        .perform(&Action::NavigateUrl(DISCOVERY_SEARCH_URL.into()))
        .map_err(blocked("search_results"))?;
    pages.insert("search_results".into(), search.current().clone());

    let trees: IndexMap<&str, A11yTree> = pages
        .iter()
        .map(|(k, d)| (k.as_str(), extract_tree(d)))
        .collect();

    let mut cache = cache;
    let mut per_pattern = IndexMap::new();
    let mut discovered = 0;
    for pattern in registry.patterns() {
        let targets: Vec<&str> = match &pattern.page {
            Some(p) => vec![p.as_str()],
            None => PAGE_KEYS.to_vec(),
        };
        let mut tried = 0;
        let mut hidden = false;
        let mut outcome = None;
        for page in targets {
            let doc = &pages[page];
            match discover_pattern_in(pattern, doc, &trees[page])? {
                Discovery::Found(record) => {
                    outcome = Some(PatternOutcome::Discovered {
                        page: page.to_string(),
                        selector: record.selector.clone(),
                        tier: record.tier.ordinal(),
                        strategy: record.tier.strategy().to_string(),
                        match_count: record.match_count,
                    });
                    cache = cache.upsert(record);
                    discovered += 1;
                    break;
                }
                Discovery::NotFound {
                    candidates_tried,
                    hidden_matches,
                } => {
                    tried += candidates_tried;
                    hidden |= hidden_matches;
                }
            }
        }
        let outcome = outcome.unwrap_or_else(|| PatternOutcome::NotFound {
            reason: if hidden {
                "matched only hidden elements".to_string()
            } else {
                "no candidate matched".to_string()
            },
            candidates_tried: tried,
        });
        per_pattern.insert(pattern.key.clone(), outcome);
    }

    Ok(DiscoveryRun {
        report: DiscoveryReport {
            attempted: registry.len(),
            discovered,
            per_pattern,
        },
        cache,
        pages,
    })
}

// ---------------------------------------------------------------------------
// Modal dismissal
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DismissalMethod {
    Selector,
    Forced,
    NoneNeeded,
}

/// Tries the dismissal selectors, then forced removal of the modal and backdrop.
pub fn dismiss_modal(doc: &DomDocument) -> (DomDocument, DismissalMethod) {
    let a11y = extract_tree(doc);
    for sel in MODAL_DISMISS_SELECTORS {
        let loc = parse_locator(sel).expect("dismissal selectors parse");
        if !loc.find_visible(doc, &a11y).is_empty() {
            return (close_modal(doc), DismissalMethod::Selector);
        }
    }
    let has_modal = doc
        .elements()
        .any(|n| n.has_class("modal") || n.has_class("modal-backdrop"));
    if has_modal {
        (close_modal(doc), DismissalMethod::Forced)
    } else {
        (doc.clone(), DismissalMethod::NoneNeeded)
    }
}

/// Removes modal and backdrop subtrees and resets the body's modal state.
pub fn close_modal(doc: &DomDocument) -> DomDocument {
    doc.edited(|root| {
        root.remove_where(&|e: &Element| e.has_class("modal") || e.has_class("modal-backdrop"));
        root.walk_mut(&mut |e| {
            if e.tag == "body" {
                let classes: Vec<String> =
                    e.classes().into_iter().filter(|c| c != "modal-open").collect();
                e.set_classes(&classes);
                clear_overflow(e);
            }
        });
    })
}

fn clear_overflow(body: &mut Element) {
    let Some(style) = body.attr("style") else {
        return;
    };
    let kept: Vec<&str> = style
        .split(';')
        .map(str::trim)
        .filter(|decl| {
            let prop = decl.split(':').next().unwrap_or("").trim().to_ascii_lowercase();
            !decl.is_empty() && !matches!(prop.as_str(), "overflow" | "overflow-x" | "overflow-y")
        })
        .collect();
    if kept.is_empty() {
        body.remove_attr("style");
    } else {
        let joined = kept.join("; ");
        body.set_attr("style", &joined);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_document;

    fn pattern(json: &str) -> PatternSpec {
        let mut p: PatternSpec = serde_json::from_str(json).unwrap();
        p.key = "p".into();
        p
    }

    fn strings(locs: Vec<Locator>) -> Vec<String> {
        locs.into_iter().map(|l| l.to_string()).collect()
    }

    #[test]
    fn tier_bijection() {
        for (i, t) in LocatorTier::ALL.iter().enumerate() {
            assert_eq!(usize::from(t.ordinal()), i + 1);
            assert_eq!(LocatorTier::from_ordinal(t.ordinal()), Some(*t));
            assert_eq!(LocatorTier::from_strategy(t.strategy()), Some(*t));
        }
        assert_eq!(LocatorTier::from_ordinal(0), None);
        assert_eq!(LocatorTier::from_ordinal(11), None);
    }

    #[test]
    fn templates_per_tier() {
        let p = pattern(
            r#"{"role":"button","role_names":["Close"],"testid":["add-to-cart"],
                "ids":["search-input","input#quantity"],"aria":["Add to Cart"],
                "href":["/view_cart"],"css":["single-products","button.cart"],
                "text":["Add to cart"]}"#,
        );
        use LocatorTier::*;
        assert_eq!(strings(synthesize_candidates(&p, RoleName)), ["role::button::Close"]);
        assert!(synthesize_candidates(&p, RoleOnly).is_empty());
        assert_eq!(
            strings(synthesize_candidates(&p, TestId)),
            ["[data-testid=add-to-cart]", "[data-qa=add-to-cart]"]
        );
        assert_eq!(
            strings(synthesize_candidates(&p, HtmlId)),
            ["#search-input", "input#quantity"]
        );
        assert_eq!(
            strings(synthesize_candidates(&p, AriaExact)),
            [r#"[aria-label="Add to Cart"]"#]
        );
        assert_eq!(
            strings(synthesize_candidates(&p, AriaContains)),
            [r#"[aria-label*="Add to Cart"]"#]
        );
        assert_eq!(strings(synthesize_candidates(&p, HrefFragment)), ["a[href*=/view_cart]"]);
        assert_eq!(
            strings(synthesize_candidates(&p, CssExact)),
            [".single-products", "button.cart"]
        );
        assert_eq!(
            strings(synthesize_candidates(&p, CssContains)),
            ["[class*=single-products]", "button[class*=cart]"]
        );
        assert_eq!(
            strings(synthesize_candidates(&p, VisibleText)),
            [r#"button:has-text("Add to cart")"#]
        );
    }

    #[test]
    fn role_only_when_no_names() {
        let p = pattern(r#"{"role":"searchbox"}"#);
        assert_eq!(
            strings(synthesize_candidates(&p, LocatorTier::RoleOnly)),
            ["role::searchbox::"]
        );
        assert!(synthesize_candidates(&p, LocatorTier::RoleName).is_empty());
    }

    #[test]
    fn empty_field_gives_no_candidates() {
        let p = pattern(r#"{"css":["x"]}"#);
        assert!(synthesize_candidates(&p, LocatorTier::AriaExact).is_empty());
    }

    #[test]
    fn lower_tier_wins() {
        let doc = parse_document(
            r#"<button data-testid="atb" class="atb">Add</button>"#,
            "t",
        );
        let p = pattern(r#"{"testid":["atb"],"css":["atb"]}"#);
        let Discovery::Found(r) = discover_pattern(&p, &doc).unwrap() else {
            panic!()
        };
        assert_eq!(r.tier, LocatorTier::TestId);
        assert_eq!(r.selector, "[data-testid=atb]");
    }

    #[test]
    fn hidden_only_matches_are_skipped() {
        let doc = parse_document(
            r#"<button data-testid="atb" hidden>Add</button><button class="atb">Add</button>"#,
            "t",
        );
        let p = pattern(r#"{"testid":["atb"],"css":["atb"]}"#);
        let r = discover_pattern(&p, &doc).unwrap();
        assert_eq!(r.record().unwrap().tier, LocatorTier::CssExact);

        let doc = parse_document(r#"<button data-testid="atb" hidden>Add</button>"#, "t");
        assert_eq!(
            discover_pattern(&p, &doc).unwrap(),
            Discovery::NotFound {
                candidates_tried: 4,
                hidden_matches: true
            }
        );
    }

    #[test]
    fn empty_pattern_is_an_error() {
        let doc = parse_document("<p>x</p>", "t");
        let p = pattern(r#"{"role_names":["orphan"]}"#);
        assert!(matches!(
            discover_pattern(&p, &doc),
            Err(EngineError::EmptyPattern(_))
        ));
    }

    #[test]
    fn registry_rejects_unknown_fields_and_pages() {
        assert!(Registry::from_json(r#"{"patterns":{"a":{"csss":["x"]}}}"#).is_err());
        assert!(Registry::from_json(r#"{"patterns":{"a":{"page":"nowhere","css":["x"]}}}"#).is_err());
        let r = Registry::from_json(r#"{"patterns":{"b":{"css":["x"]},"a":{"text":["y"]}}}"#).unwrap();
        let keys: Vec<&str> = r.patterns().iter().map(|p| p.key.as_str()).collect();
        assert_eq!(keys, ["b", "a"]);
        assert_eq!(Registry::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn infer_tier_from_selector() {
        let t = |s: &str| LocatorTier::infer(&parse_locator(s).unwrap()).ordinal();
        assert_eq!(t("role::link::Products"), 1);
        assert_eq!(t("role::searchbox::"), 2);
        assert_eq!(t("[data-qa=login-email]"), 3);
        assert_eq!(t("input#quantity"), 4);
        assert_eq!(t("a[href*=/view_cart]"), 7);
        assert_eq!(t(".product-grid-item-stale"), 8);
        assert_eq!(t("[class*=product]"), 9);
        assert_eq!(t(r#"button:has-text("Add")"#), 10);
    }

    #[test]
    fn dismissal_paths() {
        let with_control = parse_document(
            r#"<body class="modal-open" style="overflow: hidden; padding-right: 15px">
            <div class="modal show"><button class="close-modal">Continue Shopping</button></div>
            <div class="modal-backdrop"></div></body>"#,
            "t",
        );
        let (doc, method) = dismiss_modal(&with_control);
        assert_eq!(method, DismissalMethod::Selector);
        assert!(!doc.elements().any(|n| n.has_class("modal-backdrop")));
        let body = doc.elements().find(|n| n.tag() == "body").unwrap();
        assert_eq!(body.attr("style"), Some("padding-right: 15px"));
        assert!(!body.has_class("modal-open"));

        let bare = parse_document(
            r#"<body style="overflow:hidden"><div class="modal"><p>Added</p></div><div class="modal-backdrop"></div></body>"#,
            "t",
        );
        let (doc, method) = dismiss_modal(&bare);
        assert_eq!(method, DismissalMethod::Forced);
        assert!(!doc.elements().any(|n| n.has_class("modal") || n.has_class("modal-backdrop")));
        let body = doc.elements().find(|n| n.tag() == "body").unwrap();
        assert_eq!(body.attr("style"), None);

        let none = parse_document("<body><p>x</p></body>", "t");
        let (doc, method) = dismiss_modal(&none);
        assert_eq!(method, DismissalMethod::NoneNeeded);
        assert!(doc.structurally_eq(&none));
    }
}
