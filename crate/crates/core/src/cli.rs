//! Command-line front end. Exit codes: 0 success, 1 test or heal failure,
//! 2 usage or I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::cache::{load_cache, save_cache};
use crate::engine::{run_discovery_passes, Registry};
use crate::heal::{default_diag_dir, inject_stale_selector, HealError, Resolver};
use crate::report::emit_dashboard;
use crate::runner::{build_suite, execute_suite, RunConfig, DEMO_PATTERN, DEMO_STALE_SELECTOR};
use crate::sitelab::{
    apply_mutation, parse_mutations, survival_bench, DeviceName, DeviceProfile, MutationOp,
    VirtualSite, PAGE_KEYS,
};

#[derive(Debug, Parser)]
#[command(name = "healkit", version, about = "Self-healing locator discovery and offline test runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SiteArgs {
    /// Fixture directory; defaults to the bundled site.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Pattern registry JSON; defaults to the bundled registry.
    #[arg(long)]
    registry: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cold-cache discovery over all page passes.
    Discover {
        #[command(flatten)]
        site: SiteArgs,
        #[arg(long, default_value = "global_locators.json")]
        cache: PathBuf,
        #[arg(long, default_value = "desktop_chrome")]
        device: DeviceName,
    },
    /// Run the workflow suite.
    Run {
        #[command(flatten)]
        site: SiteArgs,
        #[arg(long, default_value_t = crate::runner::DEFAULT_WORKERS)]
        workers: usize,
        #[arg(long, value_delimiter = ',', default_value = "desktop_chrome,desktop_safari,iphone15")]
        devices: Vec<DeviceName>,
        /// Path prefix `L0[/L1[/L2]]`.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value = "results.json")]
        results: PathBuf,
        #[arg(long, default_value = "global_locators.json")]
        cache: PathBuf,
        #[arg(long)]
        diag_dir: Option<PathBuf>,
    },
    /// Inject a stale selector for the product tile and heal it.
    HealDemo {
        #[command(flatten)]
        site: SiteArgs,
        #[arg(long, default_value = "global_locators.json")]
        cache: PathBuf,
        #[arg(long, default_value = DEMO_STALE_SELECTOR)]
        stale: String,
    },
    /// Apply mutation ops to every fixture page.
    Mutate {
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long)]
        ops: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmarks.
    Bench {
        #[command(subcommand)]
        bench: BenchCommand,
    },
    /// Dashboard output.
    Report {
        #[command(subcommand)]
        report: ReportCommand,
    },
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Selector survival under mutation, before and after healing.
    Survival {
        #[command(flatten)]
        site: SiteArgs,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mutation list JSON; defaults to renaming every class.
        #[arg(long)]
        ops: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ReportCommand {
    /// Write the static dashboard page.
    Emit {
        #[arg(long, default_value = "dashboard.html")]
        out: PathBuf,
    },
}

type CliResult = Result<i32, String>;

pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn load_site(site: &SiteArgs, profile: DeviceProfile) -> Result<VirtualSite, String> {
    match &site.fixtures {
        Some(dir) => VirtualSite::load(dir, profile).map_err(|e| e.to_string()),
        None => Ok(VirtualSite::bundled(profile)),
    }
}

fn load_registry(site: &SiteArgs) -> Result<Registry, String> {
    match &site.registry {
        Some(path) => Registry::load(path).map_err(|e| e.to_string()),
        None => Ok(Registry::bundled()),
    }
}

/// Ignores write errors so a closed pipe (`| head`) is not a crash.
fn print_json<T: serde::Serialize>(value: &T) {
    let json = serde_json::to_string_pretty(value).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{json}");
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Discover { site, cache, device } => {
            let vs = load_site(&site, DeviceProfile::named(device))?;
            let registry = load_registry(&site)?;
            let existing = load_cache(&cache).map_err(|e| e.to_string())?;
            let run = run_discovery_passes(&vs, &registry, existing).map_err(|e| e.to_string())?;
            save_cache(&run.cache, &cache).map_err(|e| e.to_string())?;
            print_json(&run.report);
            Ok(0)
        }
        Command::Run {
            site,
            workers,
            devices,
            filter,
            results,
            cache,
            diag_dir,
        } => {
            if workers == 0 {
                return Err("--workers must be at least 1".into());
            }
            let mut profiles: Vec<DeviceProfile> = Vec::new();
            for d in devices {
                if !profiles.iter().any(|p| p.name == d) {
                    profiles.push(DeviceProfile::named(d));
                }
            }
            if profiles.is_empty() {
                return Err("--devices must name at least one profile".into());
            }
            let cases = build_suite(&profiles, filter.as_deref());
            let mut cfg = RunConfig::new(&results, &cache);
            cfg.workers = workers;
            cfg.fixtures = site.fixtures.clone();
            cfg.registry = Arc::new(load_registry(&site)?);
            cfg.diag_dir = diag_dir.unwrap_or_else(default_diag_dir);
            let summary = execute_suite(&cases, &cfg).map_err(|e| e.to_string())?;
            print_json(&summary);
            Ok(summary.exit_code())
        }
        Command::HealDemo { site, cache, stale } => heal_demo(&site, &cache, &stale),
        Command::Mutate {
            fixtures,
            ops,
            seed,
            out,
        } => {
            let args = SiteArgs {
                fixtures,
                registry: None,
            };
            let vs = load_site(&args, DeviceProfile::named(DeviceName::DesktopChrome))?;
            let ops = read_ops(&ops)?;
            std::fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            for page in PAGE_KEYS {
                let mut doc = vs.page(page).expect("all pages loaded").clone();
                for (i, op) in ops.iter().enumerate() {
                    let r = apply_mutation(&doc, op, seed.wrapping_add(i as u64))
                        .map_err(|e| e.to_string())?;
                    if r.warning() {
                        eprintln!("warning: {page}: op {} ({op:?}) changed nothing", i + 1);
                    }
                    doc = r.doc;
                }
                let path = out.join(format!("{page}.html"));
                std::fs::write(&path, doc.serialize()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            Ok(0)
        }
        Command::Bench {
            bench:
                BenchCommand::Survival {
                    site,
                    trials,
                    seed,
                    ops,
                },
        } => {
            let vs = load_site(&site, DeviceProfile::named(DeviceName::DesktopChrome))?;
            let registry = load_registry(&site)?;
            let ops = match ops {
                Some(p) => read_ops(&p)?,
                None => vec![MutationOp::RenameClass { from: None, to: None }],
            };
            let report = survival_bench(&vs, &registry, &ops, trials, seed).map_err(|e| e.to_string())?;
            print_json(&report);
            Ok(0)
        }
        Command::Report {
            report: ReportCommand::Emit { out },
        } => {
            emit_dashboard(&out).map_err(|e| e.to_string())?;
            let _ = writeln!(std::io::stdout().lock(), "{}", out.display());
            Ok(0)
        }
    }
}

fn read_ops(path: &Path) -> Result<Vec<MutationOp>, String> {
    let json = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_mutations(&json).map_err(|e| e.to_string())
}

fn heal_demo(site: &SiteArgs, cache: &Path, stale: &str) -> CliResult {
    let vs = load_site(site, DeviceProfile::named(DeviceName::DesktopChrome))?;
    let registry = Arc::new(load_registry(site)?);
    let current = load_cache(cache).map_err(|e| e.to_string())?;
    if current.get(DEMO_PATTERN).is_none() {
        let run = run_discovery_passes(&vs, &registry, current).map_err(|e| e.to_string())?;
        save_cache(&run.cache, cache).map_err(|e| e.to_string())?;
    }
    inject_stale_selector(cache, DEMO_PATTERN, stale).map_err(|e| e.to_string())?;
    let page = vs
        .perform(&crate::sitelab::Action::Navigate("category".into()))
        .map_err(|e| e.to_string())?;
    let resolver = Resolver::new(cache, registry, default_diag_dir());
    match resolver.resolve(DEMO_PATTERN, page.current()) {
        Ok(r) => match r.heal {
            Some(event) => {
                print_json(&event);
                Ok(0)
            }
            None => Err(format!("{stale} still resolves; nothing to heal")),
        },
        Err(HealError::ResolutionFailed(f)) => {
            print_json(&f.event);
            eprintln!("{}", f.capture.error_text);
            Ok(1)
        }
        Err(e) => Err(e.to_string()),
    }
}
