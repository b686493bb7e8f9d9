//! Streams the occluded, aborted overtake through the runtime monitor and
//! prints each change of outcome, raw and debounced.

use highway_assert::engine::{debounce, Debouncer, EvaluationContext, Outcome, StreamEngine, Verdict};
use highway_assert::rulepack::danger_space_assertions;
use highway_assert::scenario::{generate, preset};

fn transitions(vs: &[Verdict], id: &str) -> Vec<(f64, Outcome)> {
    let mut out: Vec<(f64, Outcome)> = Vec::new();
    for v in vs.iter().filter(|v| v.assertion_id == id) {
        if out.last().map(|l| l.1) != Some(v.result) {
            out.push((v.t, v.result));
        }
    }
    out
}

fn main() {
    let s = generate(&preset("occlusion_abort").unwrap()).unwrap();
    let ctx = EvaluationContext::new(s.map.clone(), ["two_lane_road".to_string()]);
    let mut engine = StreamEngine::new(danger_space_assertions(), ctx);
    let mut deb = Debouncer::new(3);
    let (mut raw, mut live) = (Vec::new(), Vec::new());
    for step in s.trace.steps.iter().cloned() {
        for v in engine.push_step(step).unwrap() {
            raw.push(v.clone());
            live.extend(deb.push(v));
        }
    }
    for v in engine.finish().unwrap() {
        raw.push(v.clone());
        live.extend(deb.push(v));
    }
    live.extend(deb.finish());
    assert_eq!(live.len(), debounce(&raw, 3).len());

    for d in danger_space_assertions() {
        println!("{}", d.id);
        println!("  raw:       {:?}", transitions(&raw, &d.id));
        println!("  debounced: {:?}", transitions(&live, &d.id));
    }
}
