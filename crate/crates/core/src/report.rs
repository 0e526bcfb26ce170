//! Static single-file dashboard, plus the L0 → L1 → L2 grouping it renders.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::cache::CacheError;
use crate::runner::{ResultsFile, Status};
use crate::sitelab::DeviceName;

pub const DASHBOARD_HTML: &str = include_str!("dashboard.html");
pub const POLL_INTERVAL_MS: u64 = 30_000;

/// Writes the dashboard. The output is the same bytes on every call.
pub fn emit_dashboard(out_path: &Path) -> Result<(), CacheError> {
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CacheError::IoFailure {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    crate::cache::replace_file(out_path, DASHBOARD_HTML.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct L2Row {
    pub name: String,
    pub devices: BTreeMap<DeviceName, Status>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct L1Group {
    pub name: String,
    pub features: Vec<L2Row>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct L0Group {
    pub name: String,
    pub processes: Vec<L1Group>,
}

/// Same grouping as the dashboard script: first-seen order at every level.
pub fn group_results(results: &ResultsFile) -> Vec<L0Group> {
    let mut tree: Vec<L0Group> = Vec::new();
    for t in &results.tests {
        let c = &t.case;
        let l0 = match tree.iter().position(|g| g.name == c.l0) {
            Some(i) => &mut tree[i],
            None => {
                tree.push(L0Group {
                    name: c.l0.clone(),
                    processes: Vec::new(),
                });
                tree.last_mut().expect("just pushed")
            }
        };
        let l1 = match l0.processes.iter().position(|g| g.name == c.l1) {
            Some(i) => &mut l0.processes[i],
            None => {
                l0.processes.push(L1Group {
                    name: c.l1.clone(),
                    features: Vec::new(),
                });
                l0.processes.last_mut().expect("just pushed")
            }
        };
        let l2 = match l1.features.iter().position(|r| r.name == c.l2) {
            Some(i) => &mut l1.features[i],
            None => {
                l1.features.push(L2Row {
                    name: c.l2.clone(),
                    devices: BTreeMap::new(),
                });
                l1.features.last_mut().expect("just pushed")
            }
        };
        l2.devices.insert(c.device, t.status);
    }
    tree
}
