//! Self-healing element location and an offline business-process test harness.

pub mod a11y;
pub mod cache;
pub mod cli;
pub mod dom;
pub mod engine;
pub mod heal;
pub mod report;
pub mod runner;
pub mod selector;
pub mod sitelab;

pub use a11y::{accessible_name, extract_tree, implicit_role, A11yNode, A11yTree};
pub use cache::{load_cache, save_cache, CacheError, LocatorCache, LocatorRecord, RecordStatus};
pub use dom::{parse_document, DomDocument, ElementNode, NodeId};
pub use engine::{
    discover_pattern, run_discovery_passes, synthesize_candidates, Discovery, DiscoveryReport,
    LocatorTier, PatternSpec, Registry,
};
pub use heal::{inject_stale_selector, HealError, HealEvent, HealOutcome, Resolver};
pub use selector::{match_locator, parse_locator, Locator, SelectorError};
pub use sitelab::{Action, DeviceName, DeviceProfile, MutationOp, SiteError, VirtualSite};
