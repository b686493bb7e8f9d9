mod common;

use common::{batch, defs, random_trace, streamed};
use highway_assert::engine::{debounce, Debouncer, Outcome};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn stream_matches_batch(
        seed in any::<u64>(),
        window in prop::sample::select(vec![0.1, 0.25, 0.5, 1.0, 2.0]),
        gap in 0.0f64..10.0,
        all in any::<bool>(),
        strict in any::<bool>(),
    ) {
        let d = defs(window, gap, if all { "all" } else { "first" });
        let text = random_trace(seed);
        let b = batch(&d, &text, strict);
        let s = streamed(&d, &text, strict);
        prop_assert_eq!(b, s);
    }

    #[test]
    fn streaming_debouncer_matches_offline(seed in any::<u64>(), n in 1usize..6) {
        let d = defs(0.5, 3.0, "all");
        let v = batch(&d, &random_trace(seed), true);
        let mut online = Vec::new();
        let mut deb = Debouncer::new(n);
        for x in v.iter().cloned() {
            online.extend(deb.push(x));
        }
        online.extend(deb.finish());
        highway_assert::engine::sort_verdicts(&mut online);
        prop_assert_eq!(online, debounce(&v, n));
    }
}

#[test]
fn one_verdict_per_step_for_invariants() {
    let d = defs(0.5, 2.0, "first");
    for seed in 0..20 {
        let text = random_trace(seed);
        let steps: std::collections::BTreeSet<String> = text
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["t"].to_string())
            .collect();
        let v = batch(&d, &text, true);
        assert_eq!(v.iter().filter(|v| v.assertion_id == "inv").count(), steps.len());
        assert!(v.iter().filter(|v| v.assertion_id == "inv").all(|v| v.result != Outcome::NotApplicable));
    }
}

#[test]
fn random_traces_exercise_every_kind() {
    let d = defs(0.5, 3.0, "all");
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..100 {
        for v in batch(&d, &random_trace(seed), true) {
            seen.insert((v.assertion_id, format!("{:?}", v.result)));
        }
    }
    for def in &d {
        for r in ["Pass", "Fail"] {
            assert!(seen.contains(&(def.id.clone(), r.to_string())), "{} never gave {r}", def.id);
        }
    }
}
