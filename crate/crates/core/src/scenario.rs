//! Deterministic kinematic overtaking scenarios.
//!
//! The AV moves at a constant longitudinal speed while its lateral offset
//! changes linearly in each steering segment, so a segment at angle `a`
//! moves sideways at `v * tan(a)` as in the manoeuvre-time model.

use crate::geometry::{oriented_box, Pose};
use crate::models::{stopping_distance, DrivingProfile, ModelError, ProfileName, ProfileSet, StoppingCoefficients};
use crate::trace::{distance_ahead, ActorState, Role, Step, Trace};
use crate::units::{Mph, MPS_PER_MPH};
use crate::worldmap::{two_lane_road, RoadMap};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown preset {0:?} (expected one of: {list})", list = PRESETS.join(", "))]
    UnknownPreset(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub const PRESETS: [&str; 4] = ["safe", "near_miss", "collision", "occlusion_abort"];

/// OV records are withheld before `visible_from_t` and at the listed step indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occlusion {
    pub visible_from_t: f64,
    #[serde(default)]
    pub flicker_steps: Vec<usize>,
}

/// Brake, sidestep away from the OV, drop back behind the VBP and cut in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Abort {
    pub start_t: f64,
    pub reaction_s: f64,
    pub decel_mps2: f64,
    pub min_speed_mph: f64,
    pub dodge_angle_rad: f64,
    /// Lateral offset from the running-lane centre held while falling back.
    pub dodge_lateral_offset_m: f64,
    /// Extra gap beyond the stopping distance before cutting in behind the VBP.
    pub fallback_margin_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub road_length_m: f64,
    pub lane_width_m: f64,
    pub dt_s: f64,
    pub duration_s: f64,
    pub vehicle_length_m: f64,
    pub vehicle_width_m: f64,
    pub v_av_mph: f64,
    pub v_ov_mph: f64,
    pub v_vbp_mph: f64,
    /// Gap from the AV front to the VBP rear at t = 0.
    pub av_start_gap_m: f64,
    /// VBP centre at t = 0.
    pub vbp_position_m: f64,
    pub vbp_length_m: f64,
    pub vbp_width_m: f64,
    pub profile: DrivingProfile,
    /// Lateral displacement of the AV from its lane centre while passing.
    pub lateral_offset_m: f64,
    /// AV-front to VBP-rear gap at which the pull-out starts.
    pub pull_out_gap_m: f64,
    /// Distance ahead from AV to OV at the centreline-crossing step.
    pub ov_start_offset_m: f64,
    /// OV offset from its lane centre, positive away from the centreline.
    pub ov_lane_offset_m: f64,
    #[serde(default)]
    pub occlusion: Option<Occlusion>,
    #[serde(default)]
    pub abort: Option<Abort>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidSpec(m));
        let positive = [
            ("dt_s", self.dt_s),
            ("duration_s", self.duration_s),
            ("road_length_m", self.road_length_m),
            ("lane_width_m", self.lane_width_m),
            ("vehicle_length_m", self.vehicle_length_m),
            ("vehicle_width_m", self.vehicle_width_m),
            ("vbp_length_m", self.vbp_length_m),
            ("vbp_width_m", self.vbp_width_m),
            ("ov_start_offset_m", self.ov_start_offset_m),
        ];
        for (what, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{what} must be positive, got {v}"));
            }
        }
        for (what, v) in [("v_av_mph", self.v_av_mph), ("v_ov_mph", self.v_ov_mph), ("v_vbp_mph", self.v_vbp_mph)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{what} must be non-negative, got {v}"));
            }
        }
        self.profile.validate()?;
        let top = -self.lane_width_m / 2.0 + self.lateral_offset_m + self.vehicle_width_m / 2.0;
        if !(self.lateral_offset_m > 0.0) || top > self.lane_width_m {
            return bad(format!(
                "lateral offset {} m does not fit a {} m lane",
                self.lateral_offset_m, self.lane_width_m
            ));
        }
        if let Some(a) = &self.abort {
            if !(a.decel_mps2 > 0.0 && a.dodge_angle_rad > 0.0 && a.dodge_lateral_offset_m >= 0.0) {
                return bad("abort parameters must be positive".into());
            }
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.duration_s / self.dt_s + EPS).floor() as usize + 1
    }

    /// Rounded to the nanosecond so written traces carry clean timestamps.
    fn time(&self, i: usize) -> f64 {
        (i as f64 * self.dt_s * 1e9).round() / 1e9
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Approach,
    PullOut,
    Pass,
    CutIn,
    Done,
    Dodge,
    Fallback,
}

#[derive(Debug, Clone, Copy)]
struct AvSample {
    x: f64,
    y: f64,
    heading: f64,
    speed: f64,
}

struct AvPath {
    samples: Vec<AvSample>,
    crossing: Option<usize>,
}

fn sd_m(v_mps: f64) -> f64 {
    stopping_distance(Mph(v_mps / MPS_PER_MPH), &StoppingCoefficients::default())
        .map(|s| s.total().0)
        .unwrap_or(0.0)
}

fn simulate_av(spec: &ScenarioSpec, map: &RoadMap) -> AvPath {
    let lw = spec.lane_width_m;
    let half_l = spec.vehicle_length_m / 2.0;
    let lane_y = -lw / 2.0;
    let pass_y = lane_y + spec.lateral_offset_m;
    let v_vbp = spec.v_vbp_mph * MPS_PER_MPH;
    let vbp_rear = |t: f64| spec.vbp_position_m + v_vbp * t - spec.vbp_length_m / 2.0;
    let vbp_front = |t: f64| spec.vbp_position_m + v_vbp * t + spec.vbp_length_m / 2.0;
    let dt = spec.dt_s;
    let p = &spec.profile;

    let mut x = spec.vbp_position_m - spec.vbp_length_m / 2.0 - spec.av_start_gap_m - half_l;
    let mut y = lane_y;
    let mut v = spec.v_av_mph * MPS_PER_MPH;
    let mut phase = Phase::Approach;
    let mut samples = Vec::new();
    let mut crossing = None;
    for i in 0..spec.steps() {
        let t = spec.time(i);
        let here = (x, y);
        match phase {
            Phase::Approach if vbp_rear(t) - (x + half_l) <= spec.pull_out_gap_m + 1e-12 => phase = Phase::PullOut,
            Phase::Pass if (x - half_l) - vbp_front(t) >= p.cut_in_clearance => phase = Phase::CutIn,
            Phase::Fallback if vbp_rear(t) - (x + half_l) > sd_m(v) + spec.abort.as_ref().map_or(0.0, |a| a.fallback_margin_m) => {
                phase = Phase::CutIn
            }
            _ => {}
        }
        let mut dy = 0.0;
        match phase {
            Phase::PullOut => {
                dy = v * p.pull_out_angle.tan() * dt;
                if y + dy >= pass_y {
                    dy = pass_y - y;
                    phase = Phase::Pass;
                }
            }
            Phase::Dodge => {
                let a = spec.abort.as_ref().expect("dodge only with abort");
                let target = lane_y + a.dodge_lateral_offset_m;
                dy = -v * a.dodge_angle_rad.tan() * dt;
                if y + dy <= target {
                    dy = target - y;
                    phase = Phase::Fallback;
                }
            }
            Phase::CutIn => {
                dy = -v * p.cut_in_angle.tan() * dt;
                if y + dy <= lane_y {
                    dy = lane_y - y;
                    phase = Phase::Done;
                }
            }
            _ => {}
        }
        if let Some(a) = &spec.abort {
            if phase == Phase::Pass && t >= a.start_t + a.reaction_s - EPS {
                phase = Phase::Dodge;
            }
            if t >= a.start_t - EPS {
                v = (v - a.decel_mps2 * dt).max(a.min_speed_mph * MPS_PER_MPH).min(v);
            }
        }
        let dx = v * dt;
        let heading = dy.atan2(dx);
        let sample = AvSample { x: here.0, y: here.1, heading, speed: dx.hypot(dy) / dt };
        if crossing.is_none() {
            let b = oriented_box(&Pose::new(x, y, heading), spec.vehicle_length_m, spec.vehicle_width_m)
                .expect("valid dimensions");
            if map.crosses_centreline(&b) {
                crossing = Some(i);
            }
        }
        samples.push(sample);
        x += dx;
        y += dy;
    }
    AvPath { samples, crossing }
}

/// A generated scenario: the map, the full trace and the pull-out instant.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub map: RoadMap,
    pub trace: Trace,
    /// Time of the first step at which the AV box touches the centreline.
    pub crossing_t: f64,
}

fn actor(id: &str, role: Role, pose: Pose, length: f64, width: f64, speed: f64) -> ActorState {
    ActorState {
        actor_id: id.into(),
        role,
        pose,
        length,
        width,
        recorded_speed: Some(speed),
        low_confidence: false,
    }
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario, ScenarioError> {
    spec.validate()?;
    let map = two_lane_road(spec.road_length_m, spec.lane_width_m);
    let path = simulate_av(spec, &map);
    let c = path
        .crossing
        .ok_or_else(|| ScenarioError::InvalidSpec("the AV never reaches the centreline".into()))?;
    let (len, wid) = (spec.vehicle_length_m, spec.vehicle_width_m);
    let v_ov = spec.v_ov_mph * MPS_PER_MPH;
    let v_vbp = spec.v_vbp_mph * MPS_PER_MPH;
    let ov_y = spec.lane_width_m / 2.0 + spec.ov_lane_offset_m;
    let t_c = spec.time(c);

    let av_at = |i: usize| {
        let s = path.samples[i];
        actor("av", Role::Av, Pose::new(s.x, s.y, s.heading), len, wid, s.speed)
    };
    let ov_at = |x0: f64, t: f64| actor("ov", Role::Ov, Pose::new(x0 - v_ov * t, ov_y, PI), len, wid, v_ov);

    // Place the OV so that the distance ahead at the crossing step is exact.
    let probe = ov_at(0.0, t_c);
    let x0 = spec.ov_start_offset_m - distance_ahead(&map, &av_at(c), &probe);

    let hidden = |i: usize, t: f64| match &spec.occlusion {
        Some(o) => t < o.visible_from_t - EPS || o.flicker_steps.contains(&i),
        None => false,
    };
    let steps = (0..path.samples.len())
        .map(|i| {
            let t = spec.time(i);
            let mut actors = vec![
                av_at(i),
                actor(
                    "vbp",
                    Role::Vbp,
                    Pose::new(spec.vbp_position_m + v_vbp * t, -spec.lane_width_m / 2.0, 0.0),
                    spec.vbp_length_m,
                    spec.vbp_width_m,
                    v_vbp,
                ),
            ];
            if !hidden(i, t) {
                actors.push(ov_at(x0, t));
            }
            actors.sort_by(|a, b| a.actor_id.cmp(&b.actor_id));
            Step { t, actors }
        })
        .collect();
    Ok(Scenario { map, trace: Trace::from_steps(steps), crossing_t: t_c })
}

fn fixed_gap(name: &str, da: f64) -> ScenarioSpec {
    let profile = ProfileSet::default().get("nominal").expect("bundled nominal profile").clone();
    ScenarioSpec {
        name: name.into(),
        road_length_m: 200.0,
        lane_width_m: 3.65,
        dt_s: 0.05,
        duration_s: 9.0,
        vehicle_length_m: 4.5,
        vehicle_width_m: 1.8,
        v_av_mph: 25.0,
        v_ov_mph: 25.0,
        v_vbp_mph: 0.0,
        av_start_gap_m: 60.0,
        vbp_position_m: 70.0,
        vbp_length_m: 4.5,
        vbp_width_m: 1.8,
        profile,
        lateral_offset_m: 2.0,
        pull_out_gap_m: 20.0,
        ov_start_offset_m: da,
        ov_lane_offset_m: 0.0,
        occlusion: None,
        abort: None,
    }
}

fn occlusion_abort() -> ScenarioSpec {
    let mut spec = ScenarioSpec {
        name: "occlusion_abort".into(),
        road_length_m: 600.0,
        lane_width_m: 3.65,
        dt_s: 0.05,
        duration_s: 15.0,
        vehicle_length_m: 4.5,
        vehicle_width_m: 1.8,
        v_av_mph: 50.0,
        v_ov_mph: 60.0,
        v_vbp_mph: 40.0,
        av_start_gap_m: 12.0,
        vbp_position_m: 40.0,
        vbp_length_m: 16.5,
        vbp_width_m: 1.8,
        profile: DrivingProfile {
            name: ProfileName::Custom("runtime".into()),
            pull_out_clearance: 3.5,
            pull_out_angle: 0.1,
            cut_in_clearance: 0.5,
            cut_in_angle: 0.1,
        },
        lateral_offset_m: 2.725,
        pull_out_gap_m: 9.8,
        ov_start_offset_m: 343.04,
        ov_lane_offset_m: 0.575,
        occlusion: None,
        abort: None,
    };
    let map = two_lane_road(spec.road_length_m, spec.lane_width_m);
    let c = simulate_av(&spec, &map).crossing.expect("preset crosses the centreline");
    let vis = c + (6.0 / spec.dt_s).round() as usize;
    let visible_from_t = spec.time(vis);
    spec.occlusion = Some(Occlusion { visible_from_t, flicker_steps: vec![vis + 3, vis + 4] });
    spec.abort = Some(Abort {
        start_t: visible_from_t,
        reaction_s: 0.4,
        decel_mps2: 6.0,
        min_speed_mph: 15.0,
        dodge_angle_rad: 0.08,
        dodge_lateral_offset_m: 2.125,
        fallback_margin_m: 2.0,
    });
    spec
}

pub fn preset(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    match name {
        "safe" => Ok(fixed_gap(name, 76.43)),
        "near_miss" => Ok(fixed_gap(name, 58.33)),
        "collision" => Ok(fixed_gap(name, 35.63)),
        "occlusion_abort" => Ok(occlusion_abort()),
        _ => Err(ScenarioError::UnknownPreset(name.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{min_distance, overlaps};

    fn run(name: &str) -> Scenario {
        generate(&preset(name).unwrap()).unwrap()
    }

    fn ov_gap(s: &Scenario) -> f64 {
        s.trace
            .steps
            .iter()
            .filter_map(|st| Some(min_distance(&st.actor("av")?.bbox(), &st.actor("ov")?.bbox())))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn distance_ahead_at_crossing_matches_spec() {
        for name in PRESETS {
            let spec = preset(name).unwrap();
            let s = generate(&spec).unwrap();
            let st = s.trace.steps.iter().find(|st| st.t == s.crossing_t).unwrap();
            let av = st.actor("av").unwrap();
            assert!(s.map.crosses_centreline(&av.bbox()));
            if let Some(ov) = st.actor("ov") {
                let da = distance_ahead(&s.map, av, ov);
                assert!((da - spec.ov_start_offset_m).abs() < 0.01, "{name}: {da}");
            }
        }
    }

    #[test]
    fn near_miss_and_collision_geometry() {
        let safe = ov_gap(&run("safe"));
        let near = ov_gap(&run("near_miss"));
        assert!(safe > 1.0, "{safe}");
        assert!(near > 0.0 && near < 1.0, "{near}");
        let col = run("collision");
        assert!(col.trace.steps.iter().any(|st| overlaps(&st.actor("av").unwrap().bbox(), &st.actor("ov").unwrap().bbox())));
    }

    #[test]
    fn occlusion_timing() {
        let spec = preset("occlusion_abort").unwrap();
        let s = generate(&spec).unwrap();
        let occ = spec.occlusion.as_ref().unwrap();
        assert!((occ.visible_from_t - s.crossing_t - 6.0).abs() < 1e-9);
        let first_ov = s.trace.steps.iter().position(|st| st.actor("ov").is_some()).unwrap();
        assert!((s.trace.steps[first_ov].t - occ.visible_from_t).abs() < 1e-9);
        for &k in &occ.flicker_steps {
            assert!(s.trace.steps[k].actor("ov").is_none());
        }
        let vbp_gap = s
            .trace
            .steps
            .iter()
            .map(|st| min_distance(&st.actor("av").unwrap().bbox(), &st.actor("vbp").unwrap().bbox()))
            .fold(f64::INFINITY, f64::min);
        assert!(vbp_gap > 0.0 && ov_gap(&s) > 0.0);
        let last = s.trace.steps.last().unwrap();
        let (av, vbp) = (last.actor("av").unwrap(), last.actor("vbp").unwrap());
        assert!(av.pose.x < vbp.pose.x && (av.pose.y + spec.lane_width_m / 2.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_validated() {
        let a = run("safe").trace.to_jsonl();
        assert_eq!(a, run("safe").trace.to_jsonl());
        let mut spec = preset("safe").unwrap();
        spec.lateral_offset_m = 5.0;
        assert!(matches!(generate(&spec), Err(ScenarioError::InvalidSpec(_))));
        assert!(matches!(preset("bogus"), Err(ScenarioError::UnknownPreset(_))));
    }
}
