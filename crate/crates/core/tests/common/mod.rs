#![allow(dead_code)]

pub mod dslgen;
pub mod geom;

use highway_assert::dsl::compile;
use highway_assert::engine::{
    evaluate, sort_verdicts, AssertionDef, EvaluationContext, StreamEngine, Verdict,
};
use highway_assert::trace::load_trace;
use highway_assert::worldmap::{two_lane_road, RoadMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LANE: f64 = 3.65;

pub fn road() -> RoadMap {
    two_lane_road(400.0, LANE)
}

fn line(t: f64, id: &str, role: &str, x: f64, y: f64, h: f64, len: f64) -> String {
    format!(
        r#"{{"t":{t},"actor_id":"{id}","role":"{role}","x":{x},"y":{y},"heading_rad":{h},"length_m":{len},"width_m":1.8}}"#
    )
}

/// A JSON-lines trace with an AV weaving across the centreline, a slower
/// VBP ahead and an oncoming OV, each dropping out now and then.
pub fn random_trace(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(15..60);
    let dt = [0.05, 0.1, 0.2][rng.random_range(0..3)];
    let v_av = rng.random_range(5.0..30.0);
    let v_vbp = rng.random_range(0.0..v_av);
    let v_ov = rng.random_range(5.0..30.0);
    let (mut ax, mut ay) = (rng.random_range(0.0..40.0), -LANE / 2.0);
    let mut bx = ax + rng.random_range(5.0..60.0);
    let mut ox = bx + rng.random_range(20.0..200.0);
    let lat_rate = rng.random_range(0.3..2.0);
    let mut target = -LANE / 2.0;
    let mut out = String::new();
    for i in 0..n {
        let t = (i as f64 * dt * 1e6).round() / 1e6;
        if rng.random_bool(0.08) {
            target = if target < 0.0 { LANE / 2.0 } else { -LANE / 2.0 };
        }
        let dy = (target - ay).clamp(-lat_rate * dt, lat_rate * dt);
        let heading = dy.atan2(v_av * dt);
        ay += dy;
        ax += v_av * dt + rng.random_range(-0.2..0.2);
        bx += v_vbp * dt;
        ox -= v_ov * dt;
        if !rng.random_bool(0.03) || i == 0 {
            out += &line(t, "av", "AV", ax, ay, heading, 4.5);
            out.push('\n');
        }
        if !rng.random_bool(0.1) {
            out += &line(t, "vbp", "VBP", bx, -LANE / 2.0, 0.0, 4.5);
            out.push('\n');
        }
        if !rng.random_bool(0.15) {
            out += &line(t, "ov", "OV", ox, LANE / 2.0, std::f64::consts::PI, 4.5);
            out.push('\n');
        }
    }
    out
}

/// One assertion of every kind; windows and thresholds vary with the arguments.
pub fn all_kinds_source(window_s: f64, gap_m: f64, mode: &str) -> String {
    format!(
        r#"
const gap = {gap_m}m
const w = 1s

assertion inv {{
  odd: road
  type: invariant
  severity: safety
  condition: not present("vbp") or min_distance(box_of("av"), box_of("vbp")) > gap
}}

assertion exe {{
  odd: road
  type: execution
  reference: crosses_centreline("av")
  mode: {mode}
  condition: speed_of("av") > 8mps and not overlaps(danger_space_of("av"), box_of("ov"))
}}

assertion pre_t {{
  odd: road
  type: precondition temporal
  window: {window_s}s
  reference: crosses_centreline("av")
  mode: {mode}
  condition: not present("ov") or distance_ahead("av", "ov") > sda()
}}

assertion pre_p {{
  odd: road
  type: precondition physical
  offset: {window_s}s
  reference: crosses_centreline("av")
  mode: {mode}
  severity: performance
  condition: abs(acceleration_of("av")) < 2
}}

assertion post_t {{
  odd: road
  type: postcondition temporal
  window: {window_s}s
  reference: not within_lane("av", "running")
  mode: {mode}
  condition: within_lane("av", "running") or time() < w
}}

assertion post_p {{
  odd: road
  type: postcondition physical
  offset: {window_s}s
  reference: ahead_of("av", "vbp")
  mode: {mode}
  condition: not present("vbp") or min_distance(box_of("av"), box_of("vbp")) >= cut_in_clearance()
}}
"#
    )
}

pub fn defs(window_s: f64, gap_m: f64, mode: &str) -> Vec<AssertionDef> {
    compile(&all_kinds_source(window_s, gap_m, mode)).expect("template compiles")
}

pub fn batch(defs: &[AssertionDef], text: &str, strict: bool) -> Vec<Verdict> {
    let (trace, _) = load_trace(text).expect("trace loads");
    let mut ctx = EvaluationContext::new(road(), ["road".to_string()]);
    ctx.strict_windows = strict;
    evaluate(defs, &trace, &ctx)
}

pub fn streamed(defs: &[AssertionDef], text: &str, strict: bool) -> Vec<Verdict> {
    let mut ctx = EvaluationContext::new(road(), ["road".to_string()]);
    ctx.strict_windows = strict;
    let mut engine = StreamEngine::new(defs.to_vec(), ctx);
    let mut out = Vec::new();
    for l in text.lines() {
        out.extend(engine.push_line(l).expect("stream accepts line"));
    }
    out.extend(engine.finish().expect("stream finishes"));
    sort_verdicts(&mut out);
    out
}

/// Stopping distance in metres for a speed in mph, written out longhand.
pub fn sd_oracle(v_mph: f64) -> f64 {
    0.3 * v_mph + (0.058 - 0.011 * v_mph + 0.015 * v_mph * v_mph)
}

/// Safe distance ahead at the calibration geometry (2 m offset, 4.5 m VBP,
/// stationary VBP) with AV and OV both at `v_mph`.
pub fn sda_oracle(v_mph: f64, poc: f64, cic: f64, angle: f64) -> f64 {
    let v = v_mph * 0.44704;
    let t = 2.0 * 2.0 / (v * angle.tan()) + (poc + 4.5 + cic) / v;
    2.0 * v * t + sd_oracle(v_mph)
}

pub const PROFILES: [(&str, f64, f64, f64); 3] = [
    ("relaxed", 5.0, 1.5, 0.126841966134413),
    ("nominal", 3.5, 0.5, 0.260006217271314),
    ("aggressive", 1.75, 0.25, 0.657465486437472),
];
