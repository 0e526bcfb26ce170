//! Python module `healkit`. Structured results come back as plain dicts and
//! lists (via the JSON the core already emits), so Python callers never see
//! wrapper types they did not ask for.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use healkit::engine::LocatorTier;
use healkit::heal::default_diag_dir;
use healkit::runner::{build_suite, execute_suite, RunConfig};
use healkit::sitelab::{survival_bench as bench, MutationOp};
use healkit::{extract_tree, DeviceName, DeviceProfile, HealError};

create_exception!(healkit, HealkitError, PyException);
create_exception!(healkit, UnrecoverableError, HealkitError);

fn err(e: impl std::fmt::Display) -> PyErr {
    HealkitError::new_err(e.to_string())
}

fn from_json<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (json,))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

fn profile_for(name: &str) -> PyResult<DeviceProfile> {
    let name: DeviceName = name.parse().map_err(err)?;
    Ok(DeviceProfile::named(name))
}

fn registry_or_bundled(registry: Option<&Registry>) -> healkit::Registry {
    registry.map_or_else(healkit::Registry::bundled, |r| r.inner.as_ref().clone())
}

/// A parsed HTML page.
#[pyclass(frozen, module = "healkit")]
struct Document {
    inner: healkit::DomDocument,
}

#[pymethods]
impl Document {
    #[new]
    #[pyo3(signature = (html, page_key = "page"))]
    fn new(html: &str, page_key: &str) -> Self {
        Self {
            inner: healkit::parse_document(html, page_key),
        }
    }

    #[getter]
    fn page_key(&self) -> &str {
        self.inner.page_key()
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    /// Outer HTML of every element the locator matches, in document order.
    #[pyo3(signature = (selector, visible_only = false))]
    fn query(&self, selector: &str, visible_only: bool) -> PyResult<Vec<String>> {
        let loc = healkit::parse_locator(selector).map_err(err)?;
        let a11y = extract_tree(&self.inner);
        let ids = if visible_only {
            loc.find_visible(&self.inner, &a11y)
        } else {
            loc.find(&self.inner, &a11y)
        };
        Ok(ids.into_iter().map(|id| self.inner.outer_html(id)).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.elements().count()
    }

    fn __repr__(&self) -> String {
        format!("Document(page_key={:?}, elements={})", self.inner.page_key(), self.__len__())
    }
}

/// A CSS or `role::<role>::<name>` locator.
#[pyclass(frozen, module = "healkit")]
struct Locator {
    inner: healkit::Locator,
}

#[pymethods]
impl Locator {
    #[new]
    fn new(selector: &str) -> PyResult<Self> {
        Ok(Self {
            inner: healkit::parse_locator(selector).map_err(err)?,
        })
    }

    /// Strategy tier the locator belongs to, 1 (most robust) to 10.
    #[getter]
    fn tier(&self) -> u8 {
        LocatorTier::infer(&self.inner).ordinal()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Locator({:?})", self.inner.to_string())
    }
}

/// Pattern registry: the semantic hooks discovery may use per pattern.
#[pyclass(frozen, module = "healkit")]
struct Registry {
    inner: Arc<healkit::Registry>,
}

#[pymethods]
impl Registry {
    #[staticmethod]
    fn bundled() -> Self {
        Self {
            inner: Arc::new(healkit::Registry::bundled()),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(healkit::Registry::load(&path).map_err(err)?),
        })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(healkit::Registry::from_json(json).map_err(err)?),
        })
    }

    fn keys(&self) -> Vec<String> {
        self.inner.patterns().iter().map(|p| p.key.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// The fixture site under one device profile.
#[pyclass(frozen, module = "healkit")]
struct Site {
    inner: healkit::VirtualSite,
}

#[pymethods]
impl Site {
    #[new]
    #[pyo3(signature = (device = "desktop_chrome", fixtures = None))]
    fn new(device: &str, fixtures: Option<PathBuf>) -> PyResult<Self> {
        let profile = profile_for(device)?;
        let inner = match fixtures {
            Some(dir) => healkit::VirtualSite::load(&dir, profile).map_err(err)?,
            None => healkit::VirtualSite::bundled(profile),
        };
        Ok(Self { inner })
    }

    #[getter]
    fn device(&self) -> &'static str {
        self.inner.profile().name.as_str()
    }

    fn page_keys(&self) -> Vec<String> {
        self.inner.pages().keys().cloned().collect()
    }

    fn page(&self, key: &str) -> PyResult<Document> {
        let doc = self
            .inner
            .page(key)
            .ok_or_else(|| err(format!("unknown page {key:?}")))?;
        Ok(Document { inner: doc.clone() })
    }

    /// Cold-cache discovery over every page pass; returns the report dict.
    /// When `cache_path` is given the resulting cache is merged into it.
    #[pyo3(signature = (registry = None, cache_path = None))]
    fn discover<'py>(
        &self,
        py: Python<'py>,
        registry: Option<&Registry>,
        cache_path: Option<PathBuf>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let existing = match &cache_path {
            Some(p) => healkit::load_cache(p).map_err(err)?,
            None => Default::default(),
        };
        let run = healkit::run_discovery_passes(&self.inner, &registry_or_bundled(registry), existing)
            .map_err(err)?;
        if let Some(p) = &cache_path {
            healkit::save_cache(&run.cache, p).map_err(err)?;
        }
        from_json(py, &run.report.to_json())
    }
}

/// Cache-first lookup with healing, bound to one cache file.
#[pyclass(frozen, module = "healkit")]
struct Resolver {
    inner: healkit::Resolver,
}

#[pymethods]
impl Resolver {
    #[new]
    #[pyo3(signature = (cache_path, registry = None, diag_dir = None))]
    fn new(cache_path: PathBuf, registry: Option<&Registry>, diag_dir: Option<PathBuf>) -> Self {
        let registry = registry.map_or_else(|| Arc::new(healkit::Registry::bundled()), |r| r.inner.clone());
        Self {
            inner: healkit::Resolver::new(&cache_path, registry, diag_dir.unwrap_or_else(default_diag_dir)),
        }
    }

    #[getter]
    fn run_id(&self) -> &str {
        self.inner.run_id()
    }

    /// Returns `{"selector", "matches", "heal"}`; `heal` is the heal event
    /// dict or None. Raises UnrecoverableError when nothing resolves.
    fn resolve<'py>(&self, py: Python<'py>, key: &str, doc: &Document) -> PyResult<Bound<'py, PyAny>> {
        match self.inner.resolve(key, &doc.inner) {
            Ok(r) => {
                let out = serde_json::json!({
                    "selector": r.selector,
                    "matches": r.nodes.iter().map(|id| doc.inner.outer_html(*id)).collect::<Vec<_>>(),
                    "heal": r.heal,
                });
                from_json(py, &out.to_string())
            }
            Err(HealError::ResolutionFailed(f)) => Err(UnrecoverableError::new_err(format!(
                "{} (snapshot: {})",
                f.capture.error_text,
                f.capture.snapshot_path.display()
            ))),
            Err(e) => Err(err(e)),
        }
    }
}

/// Overwrites the cached selector for `key`, as a stand-in for site drift.
#[pyfunction]
fn inject_stale_selector<'py>(py: Python<'py>, cache_path: PathBuf, key: &str, stale: &str) -> PyResult<Bound<'py, PyAny>> {
    let record = healkit::inject_stale_selector(&cache_path, key, stale).map_err(err)?;
    let json = healkit::LocatorCache::default()
        .upsert(record)
        .record_json(key)
        .expect("just inserted");
    from_json(py, &json)
}

/// Runs the workflow suite and returns the run summary dict.
#[pyfunction]
#[pyo3(signature = (results_path, cache_path, workers = 10, devices = None, filter = None, diag_dir = None))]
fn run_suite<'py>(
    py: Python<'py>,
    results_path: PathBuf,
    cache_path: PathBuf,
    workers: usize,
    devices: Option<Vec<String>>,
    filter: Option<String>,
    diag_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let profiles = match devices {
        Some(names) => names.iter().map(|n| profile_for(n)).collect::<PyResult<Vec<_>>>()?,
        None => DeviceProfile::all(),
    };
    let cases = build_suite(&profiles, filter.as_deref());
    let mut cfg = RunConfig::new(&results_path, &cache_path);
    cfg.workers = workers;
    if let Some(d) = diag_dir {
        cfg.diag_dir = d;
    }
    let summary = py.detach(|| execute_suite(&cases, &cfg)).map_err(err)?;
    from_json(py, &to_json(&summary))
}

/// Class-rename survival benchmark over the bundled site.
#[pyfunction]
#[pyo3(signature = (trials = 1, seed = 0))]
fn survival_bench<'py>(py: Python<'py>, trials: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let site = healkit::VirtualSite::bundled(DeviceProfile::named(DeviceName::DesktopChrome));
    let ops = [MutationOp::RenameClass { from: None, to: None }];
    let report = bench(&site, &healkit::Registry::bundled(), &ops, trials, seed).map_err(err)?;
    from_json(py, &report.to_json())
}

#[pyfunction]
fn emit_dashboard(out: PathBuf) -> PyResult<()> {
    healkit::report::emit_dashboard(&out).map_err(err)
}

#[pymodule]
#[pyo3(name = "healkit")]
fn healkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("HealkitError", py.get_type::<HealkitError>())?;
    m.add("UnrecoverableError", py.get_type::<UnrecoverableError>())?;
    m.add_class::<Document>()?;
    m.add_class::<Locator>()?;
    m.add_class::<Registry>()?;
    m.add_class::<Site>()?;
    m.add_class::<Resolver>()?;
    m.add_function(wrap_pyfunction!(inject_stale_selector, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(survival_bench, m)?)?;
    m.add_function(wrap_pyfunction!(emit_dashboard, m)?)?;
    Ok(())
}
