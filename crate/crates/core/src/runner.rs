//! The L0/L1/L2 workflow suite: case construction, a fixed-size worker pool,
//! and `results.json` rewritten after every completed case.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::a11y::extract_tree;
use crate::cache::{update_json_locked, CacheError, DEFAULT_LOCK_TIMEOUT};
use crate::engine::Registry;
use crate::heal::{capture_diagnostic, inject_stale_selector, new_run_id, HealError, HealEvent, Resolver};
use crate::selector::parse_locator;
use crate::sitelab::{Action, DeviceName, DeviceProfile, SiteError, VirtualSite};

pub const DEFAULT_WORKERS: usize = 10;

pub const DEMO_PATTERN: &str = "product_tile";
pub const DEMO_STALE_SELECTOR: &str = ".product-grid-item-stale";
pub const DEMO_L2: &str = "L2_self_heal_demo";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("workers must be >= 1")]
    NoWorkers,
    #[error("no device profiles given")]
    NoProfiles,
    #[error("fixtures: {0}")]
    Site(#[from] SiteError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// One scripted step. Pattern steps go through the self-healing resolver;
/// selector steps address fixture structure directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    Navigate(String),
    NavigateUrl(String),
    Click(String),
    ClickSelector(String),
    Fill(String, String),
    DismissModal,
    ExpectPage(String),
    ExpectPattern(String),
    ExpectPatternCount(String, usize),
    ExpectPatternText(String, String),
    ExpectPatternAttr(String, String, String),
    ExpectVisible(String),
    ExpectHidden(String),
    ExpectText(String),
    ExpectNoText(String),
    ExpectModal(bool),
    /// Overwrites the case's cache entry with a stale selector.
    InjectStale(String, String),
    /// Resolves the pattern and requires a heal to `(selector, tier)`.
    ExpectHeal(String, String, u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub name: String,
    pub kind: StepKind,
}

fn step(name: &str, kind: StepKind) -> Step {
    Step {
        name: name.to_string(),
        kind,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: String,
    pub l0: String,
    pub l1: String,
    pub l2: String,
    pub device: DeviceName,
    pub steps: Vec<Step>,
    /// Runs against a private copy of the shared cache.
    pub isolated_cache: bool,
}

impl TestCase {
    pub fn path(&self) -> String {
        format!("{}/{}/{}", self.l0, self.l1, self.l2)
    }

    /// Prefix match on `L0[/L1[/L2]]`.
    pub fn matches_filter(&self, filter: &str) -> bool {
        let parts: Vec<&str> = filter.split('/').filter(|p| !p.is_empty()).collect();
        let own = [self.l0.as_str(), self.l1.as_str(), self.l2.as_str()];
        parts.len() <= 3 && parts.iter().zip(own).all(|(f, o)| *f == o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInfo {
    pub id: String,
    pub l0: String,
    pub l1: String,
    pub l2: String,
    pub device: DeviceName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub name: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub case: CaseInfo,
    pub status: Status,
    pub duration_ms: u64,
    pub steps: Vec<StepResult>,
    pub heal_events: Vec<HealEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SummaryCounts {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// Cases not yet recorded.
    pub running_count: usize,
}

/// The `results.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub run_id: String,
    pub status: RunStatus,
    pub started_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub summary: SummaryCounts,
    pub tests: Vec<TestResult>,
}

impl ResultsFile {
    pub fn new(run_id: &str, total: usize) -> Self {
        let now = Utc::now();
        let mut r = Self {
            run_id: run_id.to_string(),
            status: RunStatus::Running,
            started_at: now,
            updated_at: now,
            summary: SummaryCounts {
                total,
                ..Default::default()
            },
            tests: Vec::new(),
        };
        r.recompute();
        r
    }

    pub fn recompute(&mut self) {
        let passed = self.tests.iter().filter(|t| t.status == Status::Passed).count();
        let failed = self.tests.len() - passed;
        self.summary.passed = passed;
        self.summary.failed = failed;
        self.summary.running_count = self.summary.total.saturating_sub(passed + failed);
        self.status = if passed + failed >= self.summary.total {
            RunStatus::Complete
        } else {
            RunStatus::Running
        };
        self.updated_at = Utc::now();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub status: RunStatus,
    pub started_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub running_count: usize,
    pub wall_time_ms: u64,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed > 0)
    }
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

const BROWSE: &str = "L0_browse";
const CHECKOUT: &str = "L0_checkout";

fn workflow(l0: &str, l1: &str, l2: &str, device: DeviceName, steps: Vec<Step>) -> TestCase {
    TestCase {
        id: l2.trim_start_matches("L2_").to_string(),
        l0: l0.into(),
        l1: l1.into(),
        l2: l2.into(),
        device,
        steps,
        isolated_cache: false,
    }
}

fn device_cases(profile: &DeviceProfile) -> Vec<TestCase> {
    use StepKind::*;
    let d = profile.name;
    let s = |n: &str| n.to_string();
    let persists = profile.cart_persists_across_navigation;

    let mut add_to_cart = vec![
        step("open product page", Navigate(s("product_detail"))),
        step("click add to cart", Click(s("add_to_bag"))),
        step("confirmation modal shown", ExpectModal(true)),
        step("dismiss modal", DismissModal),
        step("modal gone", ExpectModal(false)),
    ];
    if persists {
        add_to_cart.extend([
            step("open cart", Navigate(s("cart"))),
            step("item listed", ExpectPattern(s("bag_item"))),
        ]);
    }

    let mut view_cart = vec![
        step("open product page", Navigate(s("product_detail"))),
        step("set quantity", Fill(s("product_qty"), s("2"))),
        step("click add to cart", Click(s("add_to_bag"))),
        step("confirmation modal shown", ExpectModal(true)),
        step("continue shopping", ClickSelector(s(".modal .close-modal"))),
        step("open cart from header", Click(s("bag_icon"))),
        step("on cart page", ExpectPage(s("cart"))),
    ];
    if persists {
        view_cart.extend([
            step("item listed", ExpectPattern(s("bag_item"))),
            step("quantity shown", ExpectPatternText(s("bag_qty"), s("2"))),
            step("remove control", ExpectPattern(s("bag_remove"))),
            step("remove item", Click(s("bag_remove"))),
            step("cart empty", ExpectVisible(s("#empty_cart"))),
        ]);
    } else {
        // session does not survive navigation here; the modal was the signal
        view_cart.push(step("cart renders empty", ExpectVisible(s("#empty_cart"))));
    }

    vec![
        workflow(BROWSE, "L1_homepage", "L2_homepage_load", d, vec![
            step("open home", Navigate(s("home"))),
            step("products link", ExpectPattern(s("nav_products"))),
            step("search box", ExpectPattern(s("search_input"))),
            step("cart link", ExpectPattern(s("bag_icon"))),
            step("headline", ExpectText(s("Full-Fledged practice website"))),
        ]),
        workflow(BROWSE, "L1_navigation", "L2_category_nav", d, vec![
            step("open home", Navigate(s("home"))),
            step("click products", Click(s("nav_products"))),
            step("on category page", ExpectPage(s("category"))),
            step("product tiles", ExpectPatternCount(s("product_tile"), 5)),
        ]),
        workflow(BROWSE, "L1_navigation", "L2_filter_panel", d, vec![
            step("open category", Navigate(s("category"))),
            step("sidebar", ExpectPattern(s("filter_sidebar"))),
            step("panel collapsed", ExpectHidden(s("#Women"))),
            step("expand women", ClickSelector(s("a[href=\"#Women\"]"))),
            step("panel expanded", ExpectVisible(s("#Women a[href*=/category_products/]"))),
            step("open subcategory", ClickSelector(s("#Women a[href*=/category_products/]"))),
            step("on category page", ExpectPage(s("category"))),
        ]),
        workflow(BROWSE, "L1_search", "L2_search_url", d, vec![
            step("search by url", NavigateUrl(s("/products?search=top"))),
            step("on results page", ExpectPage(s("search_results"))),
            step("results heading", ExpectText(s("Searched Products"))),
            step("two hits", ExpectPatternCount(s("product_tile"), 2)),
            step("hit listed", ExpectText(s("Winter Top"))),
            step("miss filtered", ExpectNoText(s("Men Tshirt"))),
        ]),
        workflow(BROWSE, "L1_product", "L2_product_detail", d, vec![
            step("open category", Navigate(s("category"))),
            step("view product", ClickSelector(s("a[href*=/product_details/1]"))),
            step("on product page", ExpectPage(s("product_detail"))),
            step("title", ExpectPatternText(s("product_title"), s("Blue Top"))),
            step("quantity input", ExpectPatternAttr(s("product_qty"), s("value"), s("1"))),
            step("add to cart button", ExpectPattern(s("add_to_bag"))),
        ]),
        workflow(CHECKOUT, "L1_cart", "L2_add_to_cart", d, add_to_cart),
        workflow(CHECKOUT, "L1_cart", "L2_view_cart", d, view_cart),
        workflow(CHECKOUT, "L1_checkout", "L2_proceed_to_checkout", d, vec![
            step("open product page", Navigate(s("product_detail"))),
            step("click add to cart", Click(s("add_to_bag"))),
            step("dismiss modal", DismissModal),
            step("open cart", Navigate(s("cart"))),
            step("checkout button", ExpectPattern(s("checkout_button"))),
            step("proceed", Click(s("checkout_button"))),
            step("on checkout page", ExpectPage(s("checkout"))),
        ]),
        workflow(CHECKOUT, "L1_checkout", "L2_checkout_structure", d, vec![
            step("open checkout", Navigate(s("checkout"))),
            step("login heading", ExpectText(s("Login to your account"))),
            step("email field", ExpectPattern(s("login_email"))),
            step("login button", ExpectPattern(s("login_button"))),
            step("signup form", ExpectVisible(s("[data-qa=signup-name]"))),
        ]),
        workflow(CHECKOUT, "L1_account", "L2_personalisation", d, vec![
            step("open checkout", Navigate(s("checkout"))),
            step("enter email", Fill(s("login_email"), s("shopper@example.com"))),
            step("email kept", ExpectPatternAttr(s("login_email"), s("value"), s("shopper@example.com"))),
            step("back home", Click(s("nav_products"))),
            step("on category page", ExpectPage(s("category"))),
        ]),
    ]
}

/// The device-independent stale-selector demonstration.
pub fn demo_case(device: DeviceName) -> TestCase {
    use StepKind::*;
    TestCase {
        id: "self_heal_demo".into(),
        l0: BROWSE.into(),
        l1: "L1_navigation".into(),
        l2: DEMO_L2.into(),
        device,
        steps: vec![
            step("inject stale selector", InjectStale(DEMO_PATTERN.into(), DEMO_STALE_SELECTOR.into())),
            step("open category", Navigate("category".into())),
            step("resolve with healing", ExpectHeal(DEMO_PATTERN.into(), ".single-products".into(), 8)),
            step("healed entry reused", ExpectPattern(DEMO_PATTERN.into())),
        ],
        isolated_cache: true,
    }
}

/// Ten workflows per profile plus one demo case. A filter keeps cases whose
/// path starts with it; the demo is kept only when the filter names it exactly.
pub fn build_suite(profiles: &[DeviceProfile], filter: Option<&str>) -> Vec<TestCase> {
    let mut cases: Vec<TestCase> = profiles
        .iter()
        .flat_map(device_cases)
        .filter(|c| filter.is_none_or(|f| c.matches_filter(f)))
        .collect();
    if let Some(first) = profiles.first() {
        let demo = demo_case(first.name);
        let keep = match filter {
            None => true,
            Some(f) => f.split('/').nth(2) == Some(DEMO_L2) && demo.matches_filter(f),
        };
        if keep {
            cases.push(demo);
        }
    }
    cases
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub workers: usize,
    pub results_path: PathBuf,
    pub cache_path: PathBuf,
    /// `None` uses the fixtures compiled into the crate.
    pub fixtures: Option<PathBuf>,
    pub registry: Arc<Registry>,
    pub diag_dir: PathBuf,
    pub run_id: String,
}

impl RunConfig {
    pub fn new(results_path: &Path, cache_path: &Path) -> Self {
        Self {
            workers: DEFAULT_WORKERS,
            results_path: results_path.to_path_buf(),
            cache_path: cache_path.to_path_buf(),
            fixtures: None,
            registry: Arc::new(Registry::bundled()),
            diag_dir: crate::heal::default_diag_dir(),
            run_id: new_run_id(),
        }
    }
}

/// Appends one result and rewrites the whole file under the cache lock.
pub fn record_result(result: &TestResult, results_path: &Path) -> Result<ResultsFile, CacheError> {
    let (file, _) = update_json_locked(results_path, DEFAULT_LOCK_TIMEOUT, |cur: Option<ResultsFile>| {
        let mut file = cur.unwrap_or_else(|| ResultsFile::new(&new_run_id(), 0));
        file.tests.push(result.clone());
        file.summary.total = file.summary.total.max(file.tests.len());
        file.recompute();
        Ok(file)
    })?;
    Ok(file)
}

pub fn execute_suite(cases: &[TestCase], config: &RunConfig) -> Result<RunSummary, RunError> {
    if config.workers == 0 {
        return Err(RunError::NoWorkers);
    }
    let base = match &config.fixtures {
        Some(dir) => VirtualSite::load(dir, DeviceProfile::named(DeviceName::DesktopChrome))?,
        None => VirtualSite::bundled(DeviceProfile::named(DeviceName::DesktopChrome)),
    };
    let started = Instant::now();
    let initial = ResultsFile::new(&config.run_id, cases.len());
    crate::cache::atomic_write_locked(&initial, &config.results_path, DEFAULT_LOCK_TIMEOUT)?;
    let scratch = tempfile::tempdir().map_err(|e| CacheError::IoFailure {
        path: std::env::temp_dir(),
        source: e,
    })?;

    let next = AtomicUsize::new(0);
    let first_error: std::sync::Mutex<Option<CacheError>> = std::sync::Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..config.workers.min(cases.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(case) = cases.get(i) else { break };
                let result = run_case(case, &base, config, scratch.path());
                if let Err(e) = record_result(&result, &config.results_path) {
                    first_error.lock().expect("poisoned").get_or_insert(e);
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().expect("poisoned") {
        return Err(e.into());
    }

    let final_file: ResultsFile = serde_json::from_slice(
        &std::fs::read(&config.results_path).map_err(|e| CacheError::IoFailure {
            path: config.results_path.clone(),
            source: e,
        })?,
    )
    .map_err(|e| CacheError::CorruptCache {
        path: config.results_path.clone(),
        reason: e.to_string(),
    })?;
    Ok(RunSummary {
        run_id: final_file.run_id,
        status: final_file.status,
        started_at: final_file.started_at,
        updated_at: final_file.updated_at,
        total: final_file.summary.total,
        passed: final_file.summary.passed,
        failed: final_file.summary.failed,
        running_count: final_file.summary.running_count,
        wall_time_ms: duration_ms(started.elapsed()),
    })
}

fn duration_ms(d: Duration) -> u64 {
    u64::try_from(d.as_millis()).unwrap_or(u64::MAX)
}

struct CaseRun<'a> {
    site: VirtualSite,
    resolver: Resolver,
    heal_events: Vec<HealEvent>,
    case: &'a TestCase,
}

/// Runs one case to completion; failures become results, never errors.
pub fn run_case(case: &TestCase, base: &VirtualSite, config: &RunConfig, scratch: &Path) -> TestResult {
    let started = Instant::now();
    let mut steps = Vec::new();
    let mut failed = false;

    let cache_path = if case.isolated_cache {
        let private = scratch.join(format!("{}-{}-cache.json", case.id, case.device));
        if config.cache_path.exists() {
            let _ = std::fs::copy(&config.cache_path, &private);
        }
        private
    } else {
        config.cache_path.clone()
    };
    let mut run = CaseRun {
        site: base.with_profile(DeviceProfile::named(case.device)),
        resolver: Resolver::new(&cache_path, config.registry.clone(), config.diag_dir.clone())
            .with_run_id(&config.run_id),
        heal_events: Vec::new(),
        case,
    };

    for (i, st) in case.steps.iter().enumerate() {
        match run.step(&st.kind) {
            Ok(()) => steps.push(StepResult {
                name: st.name.clone(),
                status: Status::Passed,
                error_text: None,
                snapshot_path: None,
            }),
            Err(failure) => {
                let snapshot = failure.snapshot.or_else(|| {
                    let key = format!("{}-{}-step{}", case.id, case.device, i + 1);
                    capture_diagnostic(
                        run.site.current(),
                        &key,
                        &failure.message,
                        &config.diag_dir.join(&config.run_id),
                    )
                    .ok()
                    .map(|c| c.snapshot_path)
                });
                steps.push(StepResult {
                    name: st.name.clone(),
                    status: Status::Failed,
                    error_text: Some(failure.message),
                    snapshot_path: snapshot,
                });
                failed = true;
                break;
            }
        }
    }

    TestResult {
        case: CaseInfo {
            id: case.id.clone(),
            l0: case.l0.clone(),
            l1: case.l1.clone(),
            l2: case.l2.clone(),
            device: case.device,
        },
        status: if failed { Status::Failed } else { Status::Passed },
        duration_ms: duration_ms(started.elapsed()),
        steps,
        heal_events: run.heal_events,
    }
}

struct StepFailure {
    message: String,
    snapshot: Option<PathBuf>,
}

impl From<String> for StepFailure {
    fn from(message: String) -> Self {
        Self {
            message,
            snapshot: None,
        }
    }
}

impl From<SiteError> for StepFailure {
    fn from(e: SiteError) -> Self {
        e.to_string().into()
    }
}

impl From<HealError> for StepFailure {
    fn from(e: HealError) -> Self {
        match e {
            HealError::ResolutionFailed(f) => Self {
                message: f.capture.error_text.clone(),
                snapshot: Some(f.capture.snapshot_path.clone()),
            },
            other => other.to_string().into(),
        }
    }
}

impl CaseRun<'_> {
    fn resolve(&mut self, key: &str) -> Result<crate::heal::Resolution, StepFailure> {
        let r = self.resolver.resolve(key, self.site.current())?;
        if let Some(ev) = &r.heal {
            self.heal_events.push(ev.clone());
        }
        Ok(r)
    }

    fn perform(&mut self, action: Action) -> Result<(), StepFailure> {
        self.site = self.site.perform(&action)?;
        Ok(())
    }

    fn visible(&self, selector: &str) -> Result<usize, StepFailure> {
        let loc = parse_locator(selector).map_err(|e| format!("bad selector {selector:?}: {e}"))?;
        let doc = self.site.current();
        Ok(loc.find_visible(doc, &extract_tree(doc)).len())
    }

    fn step(&mut self, kind: &StepKind) -> Result<(), StepFailure> {
        let doc_text = |s: &Self| s.site.current().normalized_text(s.site.current().root().id());
        match kind {
            StepKind::Navigate(page) => self.perform(Action::Navigate(page.clone())),
            StepKind::NavigateUrl(url) => self.perform(Action::NavigateUrl(url.clone())),
            StepKind::DismissModal => self.perform(Action::DismissModal),
            StepKind::Click(key) => {
                let r = self.resolve(key)?;
                self.perform(Action::Click(parse_locator(&r.selector).expect("resolved selectors parse")))
            }
            StepKind::ClickSelector(sel) => {
                let loc = parse_locator(sel).map_err(|e| format!("bad selector {sel:?}: {e}"))?;
                self.perform(Action::Click(loc))
            }
            StepKind::Fill(key, value) => {
                let r = self.resolve(key)?;
                let loc = parse_locator(&r.selector).expect("resolved selectors parse");
                self.perform(Action::Fill(loc, value.clone()))
            }
            StepKind::ExpectPage(page) => check(
                self.site.current_page() == page,
                || format!("expected page {page}, on {}", self.site.current_page()),
            ),
            StepKind::ExpectPattern(key) => self.resolve(key).map(|_| ()),
            StepKind::ExpectPatternCount(key, n) => {
                let r = self.resolve(key)?;
                check(r.nodes.len() == *n, || {
                    format!("{key}: expected {n} visible matches of {}, found {}", r.selector, r.nodes.len())
                })
            }
            StepKind::ExpectPatternText(key, text) => {
                let r = self.resolve(key)?;
                let got = self.site.current().normalized_text(r.element());
                check(got.contains(text.as_str()), || format!("{key}: expected text {text:?}, got {got:?}"))
            }
            StepKind::ExpectPatternAttr(key, attr, value) => {
                let r = self.resolve(key)?;
                let got = self.site.current().node(r.element()).attr(attr).map(str::to_string);
                check(got.as_deref() == Some(value.as_str()), || {
                    format!("{key}: expected {attr}={value:?}, got {got:?}")
                })
            }
            StepKind::ExpectVisible(sel) => {
                let n = self.visible(sel)?;
                check(n > 0, || format!("{sel} is not visible"))
            }
            StepKind::ExpectHidden(sel) => {
                let n = self.visible(sel)?;
                check(n == 0, || format!("{sel} is visible"))
            }
            StepKind::ExpectText(text) => {
                let body = doc_text(self);
                check(body.contains(text.as_str()), || format!("page text lacks {text:?}"))
            }
            StepKind::ExpectNoText(text) => {
                let body = doc_text(self);
                check(!body.contains(text.as_str()), || format!("page text contains {text:?}"))
            }
            StepKind::ExpectModal(open) => {
                let shown = self.visible(".modal")? > 0;
                check(self.site.session().modal_open == *open && shown == *open, || {
                    format!("expected modal open={open}")
                })
            }
            StepKind::InjectStale(key, sel) => {
                inject_stale_selector(self.resolver.cache_path(), key, sel)?;
                Ok(())
            }
            StepKind::ExpectHeal(key, selector, tier) => {
                let before = self.heal_events.len();
                self.resolve(key)?;
                let ev = self.heal_events.get(before).cloned().ok_or_else(|| {
                    format!("{key} resolved from cache without healing in case {}", self.case.id)
                })?;
                check(
                    ev.recovered_selector.as_deref() == Some(selector.as_str())
                        && ev.recovered_tier == Some(*tier),
                    || format!("{key} healed to {:?} tier {:?}", ev.recovered_selector, ev.recovered_tier),
                )
            }
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), StepFailure> {
    if ok {
        Ok(())
    } else {
        Err(msg().into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_sizes() {
        let all = DeviceProfile::all();
        assert_eq!(build_suite(&all, None).len(), 31);
        assert_eq!(build_suite(&all[..1], None).len(), 11);
        assert_eq!(build_suite(&all, Some("L0_browse")).len(), 15);
        assert_eq!(build_suite(&all[..1], Some("L0_browse")).len(), 5);
        assert_eq!(build_suite(&all, Some("L0_checkout/L1_cart")).len(), 6);
        assert_eq!(
            build_suite(&all, Some("L0_browse/L1_navigation/L2_self_heal_demo")).len(),
            1
        );
        assert!(build_suite(&[], None).is_empty());
    }

    #[test]
    fn case_keys_are_unique() {
        let suite = build_suite(&DeviceProfile::all(), None);
        let mut keys: Vec<(String, DeviceName)> =
            suite.iter().map(|c| (c.id.clone(), c.device)).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), suite.len());
    }

    #[test]
    fn taxonomy_has_two_domains_and_seven_processes() {
        let suite = build_suite(&DeviceProfile::all(), None);
        let mut l0: Vec<&str> = suite.iter().map(|c| c.l0.as_str()).collect();
        let mut l1: Vec<(&str, &str)> = suite.iter().map(|c| (c.l0.as_str(), c.l1.as_str())).collect();
        l0.sort();
        l0.dedup();
        l1.sort();
        l1.dedup();
        assert_eq!((l0.len(), l1.len()), (2, 7));
    }

    #[test]
    fn filter_is_a_path_prefix() {
        let c = &build_suite(&DeviceProfile::all()[..1], None)[0];
        assert!(c.matches_filter("L0_browse"));
        assert!(c.matches_filter("L0_browse/L1_homepage"));
        assert!(!c.matches_filter("L0_brow"));
        assert!(!c.matches_filter("L0_checkout"));
    }

    #[test]
    fn summary_flips_to_complete() {
        let mut f = ResultsFile::new("r", 2);
        assert_eq!(f.status, RunStatus::Running);
        assert_eq!(f.summary.running_count, 2);
        let t = TestResult {
            case: CaseInfo {
                id: "x".into(),
                l0: "a".into(),
                l1: "b".into(),
                l2: "c".into(),
                device: DeviceName::Iphone15,
            },
            status: Status::Passed,
            duration_ms: 1,
            steps: vec![],
            heal_events: vec![],
        };
        f.tests.push(t.clone());
        f.recompute();
        assert_eq!((f.summary.passed, f.status), (1, RunStatus::Running));
        f.tests.push(TestResult {
            status: Status::Failed,
            ..t
        });
        f.recompute();
        assert_eq!((f.summary.failed, f.status), (1, RunStatus::Complete));
    }
}
