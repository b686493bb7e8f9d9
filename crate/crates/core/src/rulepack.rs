//! Overtaking rule files and the manoeuvre stage detector.

use crate::dsl::compile;
use crate::engine::{AssertionDef, Outcome, Verdict, TIME_EPS};
use crate::geometry::Point;
use crate::trace::{pull_out_angle, travel_axis, ActorState, Trace};
use crate::worldmap::{LaneSelector, RoadMap};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

pub const OVERTAKING_RULES: &str = include_str!("../rules/overtaking.rules");
pub const RUNTIME_RULES: &str = include_str!("../rules/overtaking_runtime.rules");

pub const RULE162_SDA: &str = "rule162_sda";
pub const RULE163_PULLOUT_SEPARATION: &str = "rule163_pullout_separation";
pub const RULE163_CUT_IN_CLEARANCE: &str = "rule163_cut_in_clearance";
pub const DANGER_SPACE_IDS: [&str; 4] =
    ["ds_av_clear_of_vbp", "ds_av_clear_of_ov", "av_clear_of_ds_ov", "ds_av_ds_ov_disjoint"];

pub fn overtaking() -> Vec<AssertionDef> {
    compile(OVERTAKING_RULES).expect("bundled rules compile")
}

pub fn runtime() -> Vec<AssertionDef> {
    compile(RUNTIME_RULES).expect("bundled rules compile")
}

fn by_id(defs: Vec<AssertionDef>, id: &str) -> AssertionDef {
    defs.into_iter().find(|d| d.id == id).expect("bundled assertion present")
}

pub fn rule162_sda_assertion() -> AssertionDef {
    by_id(overtaking(), RULE162_SDA)
}

pub fn rule163_pullout_separation_assertion() -> AssertionDef {
    by_id(overtaking(), RULE163_PULLOUT_SEPARATION)
}

pub fn rule163_cut_in_clearance_assertion() -> AssertionDef {
    by_id(overtaking(), RULE163_CUT_IN_CLEARANCE)
}

/// The four danger-space invariants in reporting order.
pub fn danger_space_assertions() -> Vec<AssertionDef> {
    let defs = runtime();
    DANGER_SPACE_IDS.iter().map(|id| by_id(defs.clone(), id)).collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum StageError {
    #[error("AV never leaves its running lane")]
    NoManoeuvre,
    #[error("trace has no {0}")]
    MissingActor(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub t_start: f64,
    pub t_end: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start - TIME_EPS && t <= self.t_end + TIME_EPS
    }
}

/// Boundaries are shared: each stage starts at the step where the previous one ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageIntervals {
    pub pull_out: Interval,
    pub passing: Option<Interval>,
    pub cut_in: Option<Interval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PullOut,
    Passing,
    CutIn,
}

impl StageIntervals {
    pub fn stages(&self) -> Vec<(Stage, Interval)> {
        let mut v = vec![(Stage::PullOut, self.pull_out)];
        v.extend(self.passing.map(|i| (Stage::Passing, i)));
        v.extend(self.cut_in.map(|i| (Stage::CutIn, i)));
        v
    }
}

fn extent(a: &ActorState, axis: Point) -> (f64, f64) {
    a.bbox().project(axis)
}

pub fn detect_stages(trace: &Trace, map: &RoadMap) -> Result<StageIntervals, StageError> {
    let pairs: Vec<(f64, &ActorState, &ActorState)> = trace
        .steps
        .iter()
        .filter_map(|s| Some((s.t, s.resolve("av")?, s.resolve("vbp")?)))
        .collect();
    if !trace.steps.iter().any(|s| s.resolve("av").is_some()) {
        return Err(StageError::MissingActor("AV"));
    }
    if pairs.is_empty() {
        return Err(StageError::MissingActor("VBP"));
    }
    let in_lane = |av: &ActorState| map.within(&av.bbox(), &LaneSelector::Running(travel_axis(map, av)));
    let start = pairs.iter().position(|(_, av, _)| !in_lane(av)).ok_or(StageError::NoManoeuvre)?;
    let end = (start + 1..pairs.len()).find(|&j| in_lane(pairs[j].1)).unwrap_or(pairs.len() - 1);
    let t = |i: usize| pairs[i].0;
    let rear_pass = (start..=end).find(|&k| {
        let (_, av, vbp) = pairs[k];
        let axis = Point::from_angle(travel_axis(map, av));
        extent(av, axis).0 >= extent(vbp, axis).0
    });
    let Some(k) = rear_pass else {
        return Ok(StageIntervals { pull_out: Interval { t_start: t(start), t_end: t(end) }, passing: None, cut_in: None });
    };
    let pull_out = Interval { t_start: t(start), t_end: t(k) };
    let (_, av_end, vbp_end) = pairs[end];
    let axis = Point::from_angle(travel_axis(map, av_end));
    let aborted = extent(av_end, axis).1 <= extent(vbp_end, axis).0;
    let cut = if aborted { None } else { (k + 1..=end).find(|&m| pull_out_angle(map, pairs[m].1) < -1e-9) };
    Ok(match cut {
        Some(m) => StageIntervals {
            pull_out,
            passing: Some(Interval { t_start: t(k), t_end: t(m) }),
            cut_in: Some(Interval { t_start: t(m), t_end: t(end) }),
        },
        None => StageIntervals { pull_out, passing: Some(Interval { t_start: t(k), t_end: t(end) }), cut_in: None },
    })
}

/// Per-stage outcome of each assertion: FAIL if any step in the stage fails,
/// PASS if some step passes, otherwise not applicable.
pub fn stage_report(stages: &StageIntervals, verdicts: &[Verdict]) -> BTreeMap<String, BTreeMap<Stage, Outcome>> {
    let mut out: BTreeMap<String, BTreeMap<Stage, Outcome>> = BTreeMap::new();
    for v in verdicts {
        for (stage, iv) in stages.stages() {
            if !iv.contains(v.t) {
                continue;
            }
            let cell = out.entry(v.assertion_id.clone()).or_default().entry(stage).or_insert(Outcome::NotApplicable);
            *cell = match (*cell, v.result) {
                (Outcome::Fail, _) | (_, Outcome::Fail) => Outcome::Fail,
                (Outcome::Pass, _) | (_, Outcome::Pass) => Outcome::Pass,
                _ => Outcome::NotApplicable,
            };
        }
    }
    out
}
