//! Cache-backed resolution with targeted healing: verify the cached selector,
//! and on failure invalidate it, re-discover that one pattern, and retry once.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::a11y::extract_tree;
use crate::cache::{update_cache, CacheError, LocatorRecord};
use crate::dom::{DomDocument, NodeId};
use crate::engine::{discover_pattern_in, Discovery, EngineError, LocatorTier, Registry};
use crate::selector::{parse_locator, Locator, SelectorError};

/// Overrides the default diagnostics directory.
pub const DIAG_DIR_ENV: &str = "HEALKIT_DIAG_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealOutcome {
    Healed,
    Unrecoverable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealEvent {
    pub pattern_key: String,
    pub stale_selector: String,
    pub recovered_selector: Option<String>,
    pub recovered_tier: Option<u8>,
    pub duration_ms: f64,
    pub outcome: HealOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticCapture {
    pub pattern_key: String,
    pub page_key: String,
    pub snapshot_path: PathBuf,
    pub error_text: String,
    pub captured_at: DateTime<Utc>,
}

#[derive(Debug)]
pub struct ResolutionFailure {
    pub event: HealEvent,
    pub capture: DiagnosticCapture,
}

#[derive(Debug, Error)]
pub enum HealError {
    #[error("unknown pattern {0}")]
    UnknownPattern(String),
    #[error("could not resolve {}: snapshot at {}", .0.event.pattern_key, .0.capture.snapshot_path.display())]
    ResolutionFailed(Box<ResolutionFailure>),
    #[error("invalid selector {selector:?}: {source}")]
    InvalidSelector {
        selector: String,
        #[source]
        source: SelectorError,
    },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("diagnostic capture failed at {path}: {source}")]
    Diagnostic {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    /// Visible matches in document order; the first is the resolved element.
    pub nodes: Vec<NodeId>,
    pub selector: String,
    pub heal: Option<HealEvent>,
}

impl Resolution {
    pub fn element(&self) -> NodeId {
        self.nodes[0]
    }
}

/// UTC timestamp plus four random hex digits.
pub fn new_run_id() -> String {
    format!(
        "{}-{:04x}",
        Utc::now().format("%Y%m%dT%H%M%S%3fZ"),
        rand::random::<u16>()
    )
}

/// `$HEALKIT_DIAG_DIR`, else `diagnostics` in the working directory.
pub fn default_diag_dir() -> PathBuf {
    std::env::var_os(DIAG_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("diagnostics"))
}

/// One resolver per worker; all sharing goes through the cache file lock.
#[derive(Debug, Clone)]
pub struct Resolver {
    cache_path: PathBuf,
    registry: Arc<Registry>,
    diag_dir: PathBuf,
    run_id: String,
}

impl Resolver {
    pub fn new(cache_path: &Path, registry: Arc<Registry>, diag_dir: PathBuf) -> Self {
        Self {
            cache_path: cache_path.to_path_buf(),
            registry,
            diag_dir,
            run_id: new_run_id(),
        }
    }

    pub fn with_run_id(mut self, run_id: &str) -> Self {
        self.run_id = run_id.to_string();
        self
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn cache_path(&self) -> &Path {
        &self.cache_path
    }

    pub fn resolve(&self, key: &str, doc: &DomDocument) -> Result<Resolution, HealError> {
        let pattern = self
            .registry
            .get(key)
            .ok_or_else(|| HealError::UnknownPattern(key.to_string()))?;
        let a11y = extract_tree(doc);

        let cached = crate::cache::load_cache(&self.cache_path)?.get(key).cloned();
        if let Some(record) = cached.as_ref().filter(|r| r.is_active()) {
            let loc = parse_locator(&record.selector).map_err(|source| HealError::InvalidSelector {
                selector: record.selector.clone(),
                source,
            })?;
            let nodes = loc.find_visible(doc, &a11y);
            if !nodes.is_empty() {
                return Ok(Resolution {
                    nodes,
                    selector: record.selector.clone(),
                    heal: None,
                });
            }
        }

        let started = Instant::now();
        // no record at all is a cold extraction, not a heal
        let cold = cached.is_none();
        let stale_selector = cached.map(|r| r.selector).unwrap_or_default();
        let discovery = discover_pattern_in(pattern, doc, &a11y)?;
        let found = discovery.record().cloned();
        let retried = found.as_ref().and_then(|r| {
            let loc = parse_locator(&r.selector).expect("discovered selectors parse");
            Some(loc.find_visible(doc, &a11y)).filter(|n| !n.is_empty())
        });

        match (found, retried) {
            (Some(record), Some(nodes)) => {
                let selector = record.selector.clone();
                let tier = record.tier.ordinal();
                update_cache(&self.cache_path, |c| c.invalidate(key).upsert(record))?;
                Ok(Resolution {
                    nodes,
                    selector: selector.clone(),
                    heal: (!cold).then(|| HealEvent {
                        pattern_key: key.to_string(),
                        stale_selector,
                        recovered_selector: Some(selector),
                        recovered_tier: Some(tier),
                        duration_ms: started.elapsed().as_secs_f64() * 1000.0,
                        outcome: HealOutcome::Healed,
                    }),
                })
            }
            _ => {
                update_cache(&self.cache_path, |c| c.invalidate(key))?;
                let event = HealEvent {
                    pattern_key: key.to_string(),
                    stale_selector,
                    recovered_selector: None,
                    recovered_tier: None,
                    duration_ms: started.elapsed().as_secs_f64() * 1000.0,
                    outcome: HealOutcome::Unrecoverable,
                };
                let tried = match discovery {
                    Discovery::NotFound { candidates_tried, .. } => candidates_tried,
                    Discovery::Found(_) => 0,
                };
                let error_text = format!(
                    "pattern {key} did not resolve on {}: cached selector {:?} matched nothing visible and {tried} re-extraction candidates failed",
                    doc.page_key(),
                    event.stale_selector,
                );
                let capture =
                    capture_diagnostic(doc, key, &error_text, &self.diag_dir.join(&self.run_id))?;
                Err(HealError::ResolutionFailed(Box::new(ResolutionFailure { event, capture })))
            }
        }
    }
}

/// Overwrites the cache entry for `key` with an active record for `stale`.
pub fn inject_stale_selector(cache_path: &Path, key: &str, stale: &str) -> Result<LocatorRecord, HealError> {
    let loc: Locator = parse_locator(stale).map_err(|source| HealError::InvalidSelector {
        selector: stale.to_string(),
        source,
    })?;
    let record = LocatorRecord::new(key, loc.to_string(), LocatorTier::infer(&loc), 1);
    let written = record.clone();
    update_cache(cache_path, move |c| c.upsert(written))?;
    Ok(record)
}

/// Writes the serialized document to `out_dir/<pattern_key>.html`.
pub fn capture_diagnostic(
    doc: &DomDocument,
    key: &str,
    error_text: &str,
    out_dir: &Path,
) -> Result<DiagnosticCapture, HealError> {
    let path = out_dir.join(format!("{key}.html"));
    let io = |source| HealError::Diagnostic {
        path: path.clone(),
        source,
    };
    std::fs::create_dir_all(out_dir).map_err(io)?;
    std::fs::write(&path, doc.serialize()).map_err(io)?;
    Ok(DiagnosticCapture {
        pattern_key: key.to_string(),
        page_key: doc.page_key().to_string(),
        snapshot_path: path,
        error_text: error_text.to_string(),
        captured_at: Utc::now(),
    })
}
