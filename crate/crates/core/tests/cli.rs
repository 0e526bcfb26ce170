use std::path::Path;
use std::process::{Command, Output, Stdio};

fn healkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_healkit"))
        .args(args)
        .current_dir(dir)
        .env("HEALKIT_DIAG_DIR", dir.join("diag"))
        .stdin(Stdio::null())
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn discover_writes_cache_and_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let out = healkit(dir.path(), &["discover", "--device", "iphone15"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["attempted"], 17);
    assert_eq!(report["discovered"], 14);
    assert!(dir.path().join("global_locators.json").exists());
}

#[test]
fn heal_demo_twice_heals_both_times() {
    let dir = tempfile::tempdir().unwrap();
    for _ in 0..2 {
        let out = healkit(dir.path(), &["heal-demo"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["recovered_selector"], ".single-products");
    }
}

#[test]
fn heal_demo_with_unhealable_registry_exits_one_and_captures() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("registry.json"),
        r#"{"patterns":{"product_tile":{"page":"category","css":[".nothing-like-this"]}}}"#,
    )
    .unwrap();
    // Cold discovery finds nothing; the stale record is injected anyway and
    // healing has no candidate to fall back on.
    let out = healkit(dir.path(), &["heal-demo", "--registry", "registry.json", "--cache", "c.json"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["outcome"], "unrecoverable");
    let snaps: Vec<_> = walk(&dir.path().join("diag"));
    assert!(snaps.iter().any(|p| p.ends_with("product_tile.html")), "{snaps:?}");
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let Ok(entries) = std::fs::read_dir(dir) else { return Vec::new() };
    entries
        .flatten()
        .flat_map(|e| if e.path().is_dir() { walk(&e.path()) } else { vec![e.path()] })
        .collect()
}

#[test]
fn filtered_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = healkit(dir.path(), &["run", "--devices", "desktop_safari", "--filter", "L0_checkout/L1_cart"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = json(&out);
    assert_eq!((summary["total"].as_u64(), summary["passed"].as_u64()), (Some(2), Some(2)));
    let results: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(results["status"], "complete");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(healkit(dir.path(), &["run", "--devices", "pixel9"]).status.code(), Some(2));
    assert_eq!(healkit(dir.path(), &["run", "--workers", "0"]).status.code(), Some(2));
    assert_eq!(healkit(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(healkit(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn report_emit_and_mutate() {
    let dir = tempfile::tempdir().unwrap();
    let out = healkit(dir.path(), &["report", "emit", "--out", "site/index.html"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(dir.path().join("site/index.html")).unwrap().contains("30000"));

    std::fs::write(dir.path().join("ops.json"), r#"[{"kind":"rename_class","from":"single-products","to":"tile"}]"#)
        .unwrap();
    let out = healkit(dir.path(), &["mutate", "--ops", "ops.json", "--seed", "7", "--out", "mutated"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let category = std::fs::read_to_string(dir.path().join("mutated/category.html")).unwrap();
    assert!(category.contains(r#"class="tile""#) && !category.contains("single-products"));
}
