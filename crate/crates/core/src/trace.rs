//! Trace records, timestep grouping and finite-difference dynamics.

use crate::geometry::{normalize_angle, oriented_box, overlaps, ConvexPolygon, Point, Pose};
use crate::units::MPS_PER_MPH;
use crate::worldmap::{Lanelet, RoadMap};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: time went backwards ({t} < {prev})")]
    TimeRegression { line: usize, t: f64, prev: f64 },
    #[error("line {line}: actor {actor} appears twice at t={t}")]
    DuplicateActor { line: usize, actor: String, t: f64 },
    #[error("line {line}: actor {actor} changed dimensions or role")]
    InconsistentActor { line: usize, actor: String },
    #[error("line {line}: non-finite or invalid field {field}")]
    InvalidField { line: usize, field: &'static str },
    #[error("velocity undefined: trace has {0} timestep(s)")]
    VelocityUndefined(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Av,
    Vbp,
    Ov,
    Other,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Av => "AV",
            Role::Vbp => "VBP",
            Role::Ov => "OV",
            Role::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Role {
        match s.to_ascii_lowercase().as_str() {
            "av" => Role::Av,
            "vbp" => Role::Vbp,
            "ov" => Role::Ov,
            _ => Role::Other,
        }
    }
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Role::parse(&String::deserialize(d)?))
    }
}

/// One JSON line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub actor_id: String,
    pub role: Role,
    pub x: f64,
    pub y: f64,
    pub heading_rad: f64,
    pub length_m: f64,
    pub width_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mph: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorState {
    pub actor_id: String,
    pub role: Role,
    pub pose: Pose,
    pub length: f64,
    pub width: f64,
    pub recorded_speed: Option<f64>,
    pub low_confidence: bool,
}

impl ActorState {
    pub fn bbox(&self) -> ConvexPolygon {
        oriented_box(&self.pose, self.length, self.width).expect("dimensions validated on load")
    }

    pub fn to_record(&self, t: f64) -> TraceRecord {
        TraceRecord {
            t,
            actor_id: self.actor_id.clone(),
            role: self.role,
            x: self.pose.x,
            y: self.pose.y,
            heading_rad: self.pose.heading,
            length_m: self.length,
            width_m: self.width,
            speed_mps: self.recorded_speed,
            speed_mph: None,
            low_confidence: self.low_confidence,
        }
    }
}

/// All actor states sharing one timestamp, sorted by actor id.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub t: f64,
    pub actors: Vec<ActorState>,
}

impl Step {
    pub fn actor(&self, id: &str) -> Option<&ActorState> {
        self.actors
            .binary_search_by(|a| a.actor_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.actors[i])
    }

    /// Resolve an actor reference: exact id first, then role tag
    /// (case-insensitive, smallest id wins).
    pub fn resolve(&self, name: &str) -> Option<&ActorState> {
        self.actor(name).or_else(|| {
            let role = Role::parse(name);
            if role == Role::Other && !name.eq_ignore_ascii_case("other") {
                return None;
            }
            self.actors.iter().find(|a| a.role == role)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub dt: f64,
}

impl Trace {
    pub fn from_steps(steps: Vec<Step>) -> Trace {
        let dt = median_dt(&steps);
        Trace { steps, dt }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            for a in &s.actors {
                out.push_str(&serde_json::to_string(&a.to_record(s.t)).expect("record serialises"));
                out.push('\n');
            }
        }
        out
    }
}

fn median_dt(steps: &[Step]) -> f64 {
    let mut d: Vec<f64> = steps.windows(2).map(|w| w[1].t - w[0].t).collect();
    if d.is_empty() {
        return DEFAULT_DT;
    }
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

pub fn parse_record(line: &str, line_no: usize) -> Result<TraceRecord, TraceError> {
    serde_json::from_str(line).map_err(|source| TraceError::Json { line: line_no, source })
}

/// Groups a record stream into steps, validating as it goes.
#[derive(Debug, Default)]
pub struct TraceBuilder {
    current: Option<Step>,
    known: HashMap<String, (Role, f64, f64)>,
    pub warnings: Vec<String>,
}

impl TraceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_t(&self) -> Option<f64> {
        self.current.as_ref().map(|s| s.t)
    }

    /// Feed one record. Returns the previous step once a later timestamp arrives.
    pub fn push(&mut self, rec: TraceRecord, line: usize) -> Result<Option<Step>, TraceError> {
        let bad = |field| TraceError::InvalidField { line, field };
        if !rec.t.is_finite() {
            return Err(bad("t"));
        }
        if !(rec.x.is_finite() && rec.y.is_finite()) {
            return Err(bad("position"));
        }
        if !rec.heading_rad.is_finite() {
            return Err(bad("heading_rad"));
        }
        if !(rec.length_m.is_finite() && rec.length_m > 0.0 && rec.width_m.is_finite() && rec.width_m > 0.0) {
            return Err(bad("dimensions"));
        }
        if rec.speed_mps.is_some() && rec.speed_mph.is_some() {
            self.warnings.push(format!("line {line}: both speed_mps and speed_mph given, using speed_mps"));
        }
        let recorded_speed = match (rec.speed_mps, rec.speed_mph) {
            (Some(v), _) if !v.is_finite() => return Err(bad("speed_mps")),
            (Some(v), _) => Some(v),
            (None, Some(v)) if !v.is_finite() => return Err(bad("speed_mph")),
            (None, Some(v)) => Some(v * MPS_PER_MPH),
            (None, None) => None,
        };
        match self.known.get(&rec.actor_id) {
            Some(&(role, l, w)) => {
                if role != rec.role || (l - rec.length_m).abs() > 1e-9 || (w - rec.width_m).abs() > 1e-9 {
                    return Err(TraceError::InconsistentActor { line, actor: rec.actor_id });
                }
            }
            None => {
                self.known.insert(rec.actor_id.clone(), (rec.role, rec.length_m, rec.width_m));
            }
        }
        let state = ActorState {
            actor_id: rec.actor_id,
            role: rec.role,
            pose: Pose::new(rec.x, rec.y, rec.heading_rad),
            length: rec.length_m,
            width: rec.width_m,
            recorded_speed,
            low_confidence: rec.low_confidence,
        };
        let finished;
        match &mut self.current {
            Some(step) if rec.t == step.t => {
                match step.actors.binary_search_by(|a| a.actor_id.cmp(&state.actor_id)) {
                    Ok(_) => {
                        return Err(TraceError::DuplicateActor { line, actor: state.actor_id, t: rec.t })
                    }
                    Err(pos) => step.actors.insert(pos, state),
                }
                return Ok(None);
            }
            Some(step) if rec.t < step.t => {
                return Err(TraceError::TimeRegression { line, t: rec.t, prev: step.t });
            }
            _ => {
                finished = self.current.take();
                self.current = Some(Step { t: rec.t, actors: vec![state] });
            }
        }
        Ok(finished)
    }

    pub fn finish(&mut self) -> Option<Step> {
        self.current.take()
    }
}

/// Load a JSON-lines trace. Blank lines are skipped.
pub fn load_trace(text: &str) -> Result<(Trace, Vec<String>), TraceError> {
    let mut b = TraceBuilder::new();
    let mut steps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = b.push(parse_record(line, i + 1)?, i + 1)? {
            steps.push(s);
        }
    }
    steps.extend(b.finish());
    Ok((Trace::from_steps(steps), b.warnings))
}

/// Random access to steps by absolute index. Implemented by whole traces
/// and by the streaming buffer, so both share one derivative scheme.
pub trait StepSource {
    fn step(&self, i: usize) -> Option<&Step>;
}

impl StepSource for &[Step] {
    fn step(&self, i: usize) -> Option<&Step> {
        self.get(i)
    }
}

impl StepSource for Trace {
    fn step(&self, i: usize) -> Option<&Step> {
        self.steps.get(i)
    }
}

fn sample(src: &dyn StepSource, i: Option<usize>, id: &str) -> Option<(f64, Point)> {
    let s = src.step(i?)?;
    s.actor(id).map(|a| (s.t, a.pose.position()))
}

fn slope(a: (f64, Point), b: (f64, Point)) -> Point {
    (b.1 - a.1) * (1.0 / (b.0 - a.0))
}

fn second_diff(a: (f64, Point), b: (f64, Point), c: (f64, Point)) -> Point {
    (slope(b, c) - slope(a, b)) * (2.0 / (c.0 - a.0))
}

/// Positional velocity: central inside a run of consecutive samples,
/// one-sided at run ends, recorded speed for isolated samples.
pub fn velocity_vec(src: &dyn StepSource, i: usize, id: &str) -> Option<Point> {
    let cur = src.step(i)?;
    let a = cur.actor(id)?;
    let here = (cur.t, a.pose.position());
    let prev = sample(src, i.checked_sub(1), id);
    let next = sample(src, Some(i + 1), id);
    match (prev, next) {
        (Some(p), Some(n)) => Some(slope(p, n)),
        (None, Some(n)) => Some(slope(here, n)),
        (Some(p), None) => Some(slope(p, here)),
        (None, None) => a.recorded_speed.map(|v| a.pose.forward() * v),
    }
}

/// Second difference; shifted one step inward at run ends.
pub fn acceleration_vec(src: &dyn StepSource, i: usize, id: &str) -> Option<Point> {
    let here = sample(src, Some(i), id)?;
    let p1 = sample(src, i.checked_sub(1), id);
    let n1 = sample(src, Some(i + 1), id);
    match (p1, n1) {
        (Some(p), Some(n)) => Some(second_diff(p, here, n)),
        (None, Some(n)) => sample(src, Some(i + 2), id).map(|n2| second_diff(here, n, n2)),
        (Some(p), None) => sample(src, i.checked_sub(2), id).map(|p2| second_diff(p2, p, here)),
        (None, None) => None,
    }
}

/// Lane orientation folded onto the actor's direction of travel.
pub fn travel_axis(map: &RoadMap, a: &ActorState) -> f64 {
    let Some(o) = map.lane_orientation(a.pose.position()) else {
        return a.pose.heading;
    };
    if normalize_angle(a.pose.heading - o).cos() < 0.0 {
        normalize_angle(o + PI)
    } else {
        o
    }
}

/// +1 when the oncoming lanes lie to the left of the travel axis, -1 when right.
fn oncoming_side(map: &RoadMap, a: &ActorState, axis: f64) -> f64 {
    let pos = a.pose.position();
    let nearest = |pred: &dyn Fn(&Lanelet) -> bool| {
        map.lanelets
            .iter()
            .filter(|l| pred(l))
            .min_by(|x, y| x.polygon.distance_to_point(pos).total_cmp(&y.polygon.distance_to_point(pos)))
    };
    let running = nearest(&|l| normalize_angle(axis - l.orientation).cos() > 0.0);
    let oncoming = nearest(&|l| normalize_angle(axis - l.orientation).cos() < 0.0);
    match (running, oncoming) {
        (Some(r), Some(o)) => {
            let c = Point::from_angle(axis).cross(o.polygon.centroid() - r.polygon.centroid());
            if c < 0.0 {
                -1.0
            } else {
                1.0
            }
        }
        _ => 1.0,
    }
}

/// Heading relative to the travel axis, positive toward the oncoming lanes.
pub fn pull_out_angle(map: &RoadMap, a: &ActorState) -> f64 {
    let axis = travel_axis(map, a);
    let rel = normalize_angle(a.pose.heading - axis);
    debug_assert!(rel.abs() <= FRAC_PI_2 + 1e-9);
    rel * oncoming_side(map, a, axis)
}

/// Longitudinal gap from the front of `a` to the rear of `b` along the
/// travel axis of `a`; zero when the boxes overlap.
pub fn distance_ahead(map: &RoadMap, a: &ActorState, b: &ActorState) -> f64 {
    let (ba, bb) = (a.bbox(), b.bbox());
    if overlaps(&ba, &bb) {
        return 0.0;
    }
    let axis = Point::from_angle(travel_axis(map, a));
    let (_, a_hi) = ba.project(axis);
    let (b_lo, _) = bb.project(axis);
    b_lo - a_hi
}

/// True when the rear of `a` is at or beyond the front of `b` along `a`'s travel axis.
pub fn ahead_of(map: &RoadMap, a: &ActorState, b: &ActorState) -> bool {
    let axis = Point::from_angle(travel_axis(map, a));
    let (a_lo, _) = a.bbox().project(axis);
    let (_, b_hi) = b.bbox().project(axis);
    a_lo >= b_hi
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedState {
    /// Signed speed along the heading.
    pub velocity: Option<f64>,
    pub acceleration: Option<f64>,
    pub heading_rel_lane: f64,
    pub pull_out_angle: f64,
    pub cut_in_angle: f64,
    /// For the AV only: gap to the OV when both are present.
    pub distance_ahead: Option<f64>,
}

pub fn derive_at(src: &dyn StepSource, map: &RoadMap, i: usize, id: &str) -> Option<DerivedState> {
    let step = src.step(i)?;
    let a = step.actor(id)?;
    let fwd = a.pose.forward();
    let po = pull_out_angle(map, a);
    let heading_rel_lane = map
        .lane_orientation(a.pose.position())
        .map_or(normalize_angle(a.pose.heading), |o| normalize_angle(a.pose.heading - o));
    let distance_ahead = match a.role {
        Role::Av => step.resolve("ov").map(|ov| distance_ahead(map, a, ov)),
        _ => None,
    };
    Some(DerivedState {
        velocity: velocity_vec(src, i, id).map(|v| v.dot(fwd)),
        acceleration: acceleration_vec(src, i, id).map(|v| v.dot(fwd)),
        heading_rel_lane,
        pull_out_angle: po,
        cut_in_angle: -po,
        distance_ahead,
    })
}

/// Per-step derived state keyed by actor id.
pub type Dynamics = Vec<BTreeMap<String, DerivedState>>;

/// Derived state for every actor at every step, plus speed-disagreement warnings.
pub fn derive_dynamics(trace: &Trace, map: &RoadMap) -> Result<(Dynamics, Vec<String>), TraceError> {
    if trace.steps.len() < 2 {
        return Err(TraceError::VelocityUndefined(trace.steps.len()));
    }
    let mut warnings = Vec::new();
    let mut out = Vec::with_capacity(trace.steps.len());
    for (i, step) in trace.steps.iter().enumerate() {
        let mut m = BTreeMap::new();
        for a in &step.actors {
            let d = derive_at(trace, map, i, &a.actor_id).expect("actor present");
            if let (Some(v), Some(rec)) = (velocity_vec(trace, i, &a.actor_id), a.recorded_speed) {
                if (v.norm() - rec.abs()).abs() > 0.5 {
                    warnings.push(format!(
                        "t={}: {} recorded speed {rec:.3} m/s disagrees with positional {:.3} m/s",
                        step.t,
                        a.actor_id,
                        v.norm()
                    ));
                }
            }
            m.insert(a.actor_id.clone(), d);
        }
        out.push(m);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok((out, warnings))
}
