//! Monocular range estimates from detection boxes, and their conversion to traces.
//!
//! Range follows the pinhole relation s = c * W / w for an assumed vehicle
//! width W and box width w in pixels. The lateral offset of the AV scales the
//! pixel distance to the centre line by the lane-width ratio.

use crate::geometry::Pose;
use crate::trace::{ActorState, Role, Trace, TraceBuilder, TraceError};
use crate::units::MPS_PER_MPH;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Boxes narrower than this are flagged as low confidence.
pub const LOW_CONFIDENCE_PX: f64 = 5.0;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("detections out of order: t={t} after t={prev}")]
    Unordered { t: f64, prev: f64 },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorClass {
    Car,
    GoodsVehicle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoleHint {
    #[serde(rename = "VBP")]
    Vbp,
    #[serde(rename = "OV")]
    Ov,
    #[serde(rename = "unknown")]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub t: f64,
    pub frame: u64,
    pub class: ActorClass,
    pub box_width_px: f64,
    pub box_centre_px: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role_hint: Option<RoleHint>,
    /// Horizontal pixel position of the centre line in this frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centre_line_px: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraCalibration {
    pub c: f64,
    pub assumed_vehicle_width_m: f64,
    pub lane_width_real_m: f64,
    pub lane_width_px: f64,
    pub frame_centre_px: f64,
}

impl CameraCalibration {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        let fields = [
            ("c", self.c),
            ("assumed_vehicle_width_m", self.assumed_vehicle_width_m),
            ("lane_width_real_m", self.lane_width_real_m),
            ("lane_width_px", self.lane_width_px),
            ("frame_centre_px", self.frame_centre_px),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            Some((name, v)) => Err(PerceptionError::InvalidArgument(format!("{name} must be positive, got {v}"))),
            None => Ok(()),
        }
    }

    fn metres_per_px(&self) -> f64 {
        self.lane_width_real_m / self.lane_width_px
    }
}

pub fn longitudinal_distance(rec: &DetectionRecord, cal: &CameraCalibration) -> Result<f64, PerceptionError> {
    let w = rec.box_width_px;
    if !(w.is_finite() && w > 0.0) {
        return Err(PerceptionError::InvalidArgument(format!("box width {w} px")));
    }
    Ok(cal.c * cal.assumed_vehicle_width_m / w)
}

/// Signed offset from the centre line, positive into the oncoming lane.
pub fn lateral_offset(d_px: f64, cal: &CameraCalibration) -> f64 {
    cal.metres_per_px() * d_px
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassModel {
    pub length_m: f64,
    pub width_m: f64,
    pub speed_limit_mph: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedSource {
    /// Record each target at the speed limit for its class.
    #[default]
    Limit,
    /// Leave speeds to be differentiated from positions.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub av_speed_mph: f64,
    pub av_length_m: f64,
    pub av_width_m: f64,
    pub car: ClassModel,
    pub goods_vehicle: ClassModel,
    /// Fixed lateral positions; default to the lane centres.
    pub vbp_lateral_m: Option<f64>,
    pub ov_lateral_m: Option<f64>,
    pub speed_source: SpeedSource,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            av_speed_mph: 50.0,
            av_length_m: 4.5,
            av_width_m: 1.8,
            car: ClassModel { length_m: 4.5, width_m: 1.8, speed_limit_mph: 60.0 },
            goods_vehicle: ClassModel { length_m: 16.5, width_m: 1.8, speed_limit_mph: 50.0 },
            vbp_lateral_m: None,
            ov_lateral_m: None,
            speed_source: SpeedSource::Limit,
        }
    }
}

impl EstimatorConfig {
    fn class(&self, c: ActorClass) -> &ClassModel {
        match c {
            ActorClass::Car => &self.car,
            ActorClass::GoodsVehicle => &self.goods_vehicle,
        }
    }
}

pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>, PerceptionError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| PerceptionError::Json { line: i + 1, source }))
        .collect()
}

/// Build a trace with the AV at the origin of its own motion and each
/// hinted target placed at its estimated range ahead.
pub fn boxes_to_trace(
    records: &[DetectionRecord],
    cal: &CameraCalibration,
    cfg: &EstimatorConfig,
) -> Result<(Trace, Vec<String>), PerceptionError> {
    cal.validate()?;
    let mut warnings = Vec::new();
    for w in records.windows(2) {
        if w[1].t < w[0].t {
            return Err(PerceptionError::Unordered { t: w[1].t, prev: w[0].t });
        }
    }
    let v_av = cfg.av_speed_mph * MPS_PER_MPH;
    let half_lane = cal.lane_width_real_m / 2.0;
    let t0 = records.first().map_or(0.0, |r| r.t);

    // One frame per timestamp; the AV offset carries over frames without a centre line.
    let mut frames: Vec<(f64, Vec<&DetectionRecord>)> = Vec::new();
    for r in records {
        match frames.last_mut() {
            Some((t, rs)) if *t == r.t => rs.push(r),
            _ => frames.push((r.t, vec![r])),
        }
    }
    let mut av_y = -half_lane;
    let av_track: Vec<(f64, f64, f64)> = frames
        .iter()
        .map(|(t, rs)| {
            if let Some(px) = rs.iter().find_map(|r| r.centre_line_px) {
                av_y = lateral_offset(px - cal.frame_centre_px, cal);
            }
            (*t, v_av * (t - t0), av_y)
        })
        .collect();

    let mut builder = TraceBuilder::new();
    let mut steps = Vec::new();
    for (k, (t, rs)) in frames.iter().enumerate() {
        let (_, x, y) = av_track[k];
        let (a, b) = match (k.checked_sub(1), av_track.get(k + 1)) {
            (_, Some(n)) => (av_track[k], *n),
            (Some(p), None) => (av_track[p], av_track[k]),
            (None, None) => (av_track[k], (t + 1.0, x + v_av, y)),
        };
        let heading = (b.2 - a.2).atan2(b.1 - a.1);
        let av = ActorState {
            actor_id: "av".into(),
            role: Role::Av,
            pose: Pose::new(x, y, heading),
            length: cfg.av_length_m,
            width: cfg.av_width_m,
            recorded_speed: Some(v_av),
            low_confidence: false,
        };
        let mut records = vec![av.to_record(*t)];
        for r in rs {
            let (id, role, lateral, facing) = match r.role_hint {
                Some(RoleHint::Vbp) => ("vbp", Role::Vbp, cfg.vbp_lateral_m.unwrap_or(-half_lane), 0.0),
                Some(RoleHint::Ov) => ("ov", Role::Ov, cfg.ov_lateral_m.unwrap_or(half_lane), PI),
                _ => {
                    warnings.push(format!("t={t}: skipping detection without a role hint"));
                    continue;
                }
            };
            let model = cfg.class(r.class);
            let s = longitudinal_distance(r, cal)?;
            let speed = match cfg.speed_source {
                SpeedSource::Limit => Some(model.speed_limit_mph * MPS_PER_MPH),
                SpeedSource::Measured => None,
            };
            let target = ActorState {
                actor_id: id.into(),
                role,
                pose: Pose::new(x + cfg.av_length_m / 2.0 + s + model.length_m / 2.0, lateral, facing),
                length: model.length_m,
                width: model.width_m,
                recorded_speed: speed,
                low_confidence: r.box_width_px < LOW_CONFIDENCE_PX,
            };
            records.push(target.to_record(*t));
        }
        for (line, rec) in records.into_iter().enumerate() {
            steps.extend(builder.push(rec, k + line + 1)?);
        }
    }
    steps.extend(builder.finish());
    warnings.extend(builder.warnings);
    Ok((Trace::from_steps(steps), warnings))
}

/// Detections a forward camera on the AV would report for the VBP and OV in
/// `trace`: every target whose near face is ahead of the AV front.
pub fn synthesize_detections(trace: &Trace, cal: &CameraCalibration) -> Vec<DetectionRecord> {
    let px_per_m = 1.0 / cal.metres_per_px();
    let mut out = Vec::new();
    for (frame, step) in trace.steps.iter().enumerate() {
        let Some(av) = step.resolve("av") else { continue };
        let av_front = av.pose.x + av.length / 2.0;
        let centre_line_px = cal.frame_centre_px + av.pose.y * px_per_m;
        for (hint, name) in [(RoleHint::Vbp, "vbp"), (RoleHint::Ov, "ov")] {
            let Some(tgt) = step.resolve(name) else { continue };
            let s = tgt.pose.x - tgt.length / 2.0 - av_front;
            if s <= 0.5 {
                continue;
            }
            out.push(DetectionRecord {
                t: step.t,
                frame: frame as u64,
                class: if tgt.length > 8.0 { ActorClass::GoodsVehicle } else { ActorClass::Car },
                box_width_px: cal.c * cal.assumed_vehicle_width_m / s,
                box_centre_px: cal.frame_centre_px - (tgt.pose.y - av.pose.y) * px_per_m,
                role_hint: Some(hint),
                centre_line_px: Some(centre_line_px),
            });
        }
    }
    out
}

pub fn detections_jsonl(records: &[DetectionRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("detection serialises") + "\n")
        .collect()
}
