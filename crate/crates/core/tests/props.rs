mod common;

use common::{oracle_match, random_document, random_locator, random_registry};
use healkit::engine::{discover_pattern, run_discovery_passes, Registry};
use healkit::sitelab::{apply_mutation, DeviceName, DeviceProfile, MutationOp, VirtualSite};
use healkit::{extract_tree, parse_document, parse_locator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), 120);
        let html = doc.serialize();
        let again = parse_document(&html, "generated");
        prop_assert!(again.structurally_eq(&doc), "{html}");
        prop_assert_eq!(again.serialize(), html);
    }

    #[test]
    fn locator_display_round_trips(seed in any::<u64>()) {
        let loc = random_locator(&mut rng(seed));
        let text = loc.to_string();
        prop_assert_eq!(parse_locator(&text).unwrap(), loc, "{}", text);
    }

    #[test]
    fn matcher_agrees_with_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let doc = random_document(&mut r, 80);
        let a11y = extract_tree(&doc);
        let loc = random_locator(&mut r);
        prop_assert_eq!(loc.find(&doc, &a11y), oracle_match(&loc, &doc, &a11y), "{}", loc);
    }

    #[test]
    fn discovery_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let doc = random_document(&mut r, 60);
        let reg = random_registry(&mut r, 4);
        for p in reg.patterns() {
            let a = discover_pattern(p, &doc).unwrap();
            let b = discover_pattern(p, &doc).unwrap();
            prop_assert_eq!(a.record().map(|x| (&x.selector, x.tier)), b.record().map(|x| (&x.selector, x.tier)));
        }
    }

    #[test]
    fn mutations_stay_parseable(seed in any::<u64>(), op in 0usize..5) {
        let doc = random_document(&mut rng(seed), 80);
        let op = match op {
            0 => MutationOp::RenameClass { from: None, to: None },
            1 => MutationOp::RemoveAttribute { name: "data-qa".into(), target: None },
            2 => MutationOp::ChangeText { target: "button".into(), text: "Buy & go".into() },
            3 => MutationOp::InsertWrapper { target: "a".into(), tag: "div".into(), class: Some("w".into()) },
            _ => MutationOp::RegenerateSyntheticClasses,
        };
        let a = apply_mutation(&doc, &op, seed).unwrap().doc;
        let b = apply_mutation(&doc, &op, seed).unwrap().doc;
        prop_assert_eq!(a.serialize(), b.serialize());
        let reparsed = parse_document(&a.serialize(), "m");
        prop_assert_eq!(reparsed.serialize(), a.serialize());
    }
}

#[test]
fn identical_action_sequences_give_equal_sites() {
    use healkit::sitelab::Action;
    let actions = [
        Action::Navigate("product_detail".into()),
        Action::AddToCart(1),
        Action::DismissModal,
        Action::Navigate("cart".into()),
    ];
    for device in DeviceName::ALL {
        let run = || {
            actions.iter().fold(VirtualSite::bundled(DeviceProfile::named(device)), |s, a| {
                s.perform(a).unwrap()
            })
        };
        assert!(run().same_state(&run()));
    }
}

#[test]
fn device_profiles_share_page_doms() {
    let a = VirtualSite::bundled(DeviceProfile::named(DeviceName::DesktopChrome));
    let b = VirtualSite::bundled(DeviceProfile::named(DeviceName::Iphone15));
    for (k, doc) in a.pages() {
        assert!(doc.structurally_eq(b.page(k).unwrap()), "{k}");
    }
}

#[test]
fn empty_registry_discovers_nothing() {
    let site = VirtualSite::bundled(DeviceProfile::named(DeviceName::DesktopChrome));
    let run = run_discovery_passes(&site, &Registry::default(), Default::default()).unwrap();
    assert_eq!((run.report.attempted, run.report.discovered), (0, 0));
}
