//! `global_locators.json`: one locator cache shared by every device profile,
//! written with a create-exclusive lock file and temp-file + rename.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant, SystemTime};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::LocatorTier;
use crate::selector::parse_locator;

pub const CACHE_VERSION: u32 = 1;
pub const DEFAULT_LOCK_TIMEOUT: Duration = Duration::from_secs(3);
pub const LOCK_SPIN: Duration = Duration::from_millis(25);
/// Lock files older than this are treated as left behind by a dead writer.
pub const STALE_LOCK_AGE: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("corrupt cache {path}: {reason}")]
    CorruptCache { path: PathBuf, reason: String },
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Active,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatorRecord {
    pub pattern_key: String,
    pub selector: String,
    pub tier: LocatorTier,
    pub match_count: usize,
    pub status: RecordStatus,
    pub discovered_at: DateTime<Utc>,
    pub last_verified: DateTime<Utc>,
}

impl LocatorRecord {
    pub fn new(pattern_key: &str, selector: String, tier: LocatorTier, match_count: usize) -> Self {
        let now = Utc::now();
        Self {
            pattern_key: pattern_key.to_string(),
            selector,
            tier,
            match_count,
            status: RecordStatus::Active,
            discovered_at: now,
            last_verified: now,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == RecordStatus::Active
    }
}

/// On-disk shape of a record; the pattern key is the enclosing map key.
#[derive(Serialize, Deserialize)]
struct RecordWire {
    selector: String,
    tier: u8,
    strategy: String,
    match_count: usize,
    status: RecordStatus,
    discovered_at: DateTime<Utc>,
    last_verified: DateTime<Utc>,
}

#[derive(Serialize, Deserialize)]
struct CacheWire {
    version: u32,
    updated_at: DateTime<Utc>,
    locators: BTreeMap<String, RecordWire>,
}

/// Immutable cache snapshot; updates return a new value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatorCache {
    pub version: u32,
    pub updated_at: DateTime<Utc>,
    locators: BTreeMap<String, LocatorRecord>,
}

impl Default for LocatorCache {
    fn default() -> Self {
        Self {
            version: CACHE_VERSION,
            updated_at: Utc::now(),
            locators: BTreeMap::new(),
        }
    }
}

impl LocatorCache {
    pub fn get(&self, key: &str) -> Option<&LocatorRecord> {
        self.locators.get(key)
    }

    pub fn len(&self) -> usize {
        self.locators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locators.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &LocatorRecord> {
        self.locators.values()
    }

    #[must_use]
    pub fn upsert(mut self, record: LocatorRecord) -> Self {
        self.locators.insert(record.pattern_key.clone(), record);
        self.updated_at = Utc::now();
        self
    }

    /// Marks the entry invalid; the record is kept for audit. Absent keys are a no-op.
    #[must_use]
    pub fn invalidate(mut self, key: &str) -> Self {
        if let Some(rec) = self.locators.get_mut(key) {
            rec.status = RecordStatus::Invalid;
            self.updated_at = Utc::now();
        }
        self
    }

    /// Serialized record for `key`, for byte-level comparisons.
    pub fn record_json(&self, key: &str) -> Option<String> {
        self.locators
            .get(key)
            .map(|r| serde_json::to_string(&to_wire(r)).expect("record serializes"))
    }

    /// `pattern_key -> (selector, tier)` view with timestamps stripped.
    pub fn selector_map(&self) -> BTreeMap<String, (String, u8)> {
        self.locators
            .iter()
            .map(|(k, r)| (k.clone(), (r.selector.clone(), r.tier.ordinal())))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cache serializes")
    }
}

fn to_wire(r: &LocatorRecord) -> RecordWire {
    RecordWire {
        selector: r.selector.clone(),
        tier: r.tier.ordinal(),
        strategy: r.tier.strategy().to_string(),
        match_count: r.match_count,
        status: r.status,
        discovered_at: r.discovered_at,
        last_verified: r.last_verified,
    }
}

impl Serialize for LocatorCache {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CacheWire {
            version: self.version,
            updated_at: self.updated_at,
            locators: self
                .locators
                .iter()
                .map(|(k, r)| (k.clone(), to_wire(r)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocatorCache {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let wire = CacheWire::deserialize(d)?;
        let mut locators = BTreeMap::new();
        for (key, w) in wire.locators {
            let tier = LocatorTier::from_ordinal(w.tier)
                .ok_or_else(|| D::Error::custom(format!("{key}: tier {} out of range", w.tier)))?;
            if tier.strategy() != w.strategy {
                return Err(D::Error::custom(format!(
                    "{key}: strategy {} does not match tier {}",
                    w.strategy, w.tier
                )));
            }
            parse_locator(&w.selector)
                .map_err(|e| D::Error::custom(format!("{key}: bad selector: {e}")))?;
            if w.match_count == 0 {
                return Err(D::Error::custom(format!("{key}: match_count must be >= 1")));
            }
            locators.insert(
                key.clone(),
                LocatorRecord {
                    pattern_key: key,
                    selector: w.selector,
                    tier,
                    match_count: w.match_count,
                    status: w.status,
                    discovered_at: w.discovered_at,
                    last_verified: w.last_verified,
                },
            );
        }
        Ok(LocatorCache {
            version: wire.version,
            updated_at: wire.updated_at,
            locators,
        })
    }
}

/// Missing file yields an empty cache; anything unparseable is an error.
pub fn load_cache(path: &Path) -> Result<LocatorCache, CacheError> {
    match read_json(path)? {
        Some(cache) => Ok(cache),
        None => Ok(LocatorCache::default()),
    }
}

pub fn save_cache(cache: &LocatorCache, path: &Path) -> Result<WriteOutcome, CacheError> {
    atomic_write_locked(cache, path, DEFAULT_LOCK_TIMEOUT)
}

/// Locked read-modify-write of the cache file.
pub fn update_cache(
    path: &Path,
    f: impl FnOnce(LocatorCache) -> LocatorCache,
) -> Result<LocatorCache, CacheError> {
    let (cache, _) = update_json_locked(path, DEFAULT_LOCK_TIMEOUT, |cur: Option<LocatorCache>| {
        Ok(f(cur.unwrap_or_default()))
    })?;
    Ok(cache)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>, CacheError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(path)(e)),
    };
    serde_json::from_slice(&bytes)
        .map(Some)
        .map_err(|e| CacheError::CorruptCache {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

// ---------------------------------------------------------------------------
// Lock + atomic write
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WriteOutcome {
    Locked,
    Fallback,
}

pub fn lock_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".lock");
    PathBuf::from(s)
}

/// Exclusive `<path>.lock`, removed on drop.
pub struct FileLock {
    path: PathBuf,
}

impl FileLock {
    /// Spins until the lock is created or `timeout` elapses (`Ok(None)`).
    pub fn acquire(target: &Path, timeout: Duration) -> Result<Option<FileLock>, CacheError> {
        let path = lock_path(target);
        let deadline = Instant::now() + timeout;
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = write!(f, "{}", std::process::id());
                    return Ok(Some(FileLock { path }));
                }
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    if lock_is_stale(&path) {
                        let _ = fs::remove_file(&path);
                        continue;
                    }
                }
                Err(e) => return Err(io_err(&path)(e)),
            }
            if Instant::now() >= deadline {
                return Ok(None);
            }
            thread::sleep(LOCK_SPIN);
        }
    }
}

impl Drop for FileLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn lock_is_stale(path: &Path) -> bool {
    fs::metadata(path)
        .and_then(|m| m.modified())
        .ok()
        .and_then(|t| SystemTime::now().duration_since(t).ok())
        .is_some_and(|age| age > STALE_LOCK_AGE)
}

/// Writes bytes to a sibling temp file and renames it over `path`.
pub fn replace_file(path: &Path, bytes: &[u8]) -> Result<(), CacheError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".healkit-")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Lock, write to a temp file, rename. On lock timeout the same write happens
/// without the lock and the outcome is [`WriteOutcome::Fallback`].
pub fn atomic_write_locked<T: Serialize + ?Sized>(
    payload: &T,
    path: &Path,
    lock_timeout: Duration,
) -> Result<WriteOutcome, CacheError> {
    let bytes = serde_json::to_vec_pretty(payload).expect("payload serializes");
    let guard = FileLock::acquire(path, lock_timeout)?;
    replace_file(path, &bytes)?;
    Ok(match guard {
        Some(_) => WriteOutcome::Locked,
        None => WriteOutcome::Fallback,
    })
}

/// Read-modify-write under the lock. `f` receives the current parsed content
/// (or `None` when the file does not exist yet).
pub fn update_json_locked<T, F>(
    path: &Path,
    lock_timeout: Duration,
    f: F,
) -> Result<(T, WriteOutcome), CacheError>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce(Option<T>) -> Result<T, CacheError>,
{
    let guard = FileLock::acquire(path, lock_timeout)?;
    let current = read_json(path)?;
    let next = f(current)?;
    let bytes = serde_json::to_vec_pretty(&next).expect("payload serializes");
    replace_file(path, &bytes)?;
    let outcome = if guard.is_some() {
        WriteOutcome::Locked
    } else {
        WriteOutcome::Fallback
    };
    drop(guard);
    Ok((next, outcome))
}
