//! Stopping distance, manoeuvre time, safe distance ahead and TTC.

use crate::units::{Metres, MetresPerSecond, Mph, Seconds};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no overtake possible: AV speed {v_av} m/s does not exceed VBP speed {v_vbp} m/s")]
    NoOvertakePossible { v_av: f64, v_vbp: f64 },
    #[error("time to collision undefined for non-positive closing speed {0} m/s")]
    UndefinedTtc(f64),
    #[error("unknown profile {0}")]
    UnknownProfile(String),
    #[error("profile config: {0}")]
    Config(#[from] serde_json::Error),
}

/// Regression coefficients for stopping distance (speed in mph, result in m):
/// thinking = a*v, braking = b + c*v + d*v^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for StoppingCoefficients {
    fn default() -> Self {
        StoppingCoefficients { a: 0.300, b: 0.058, c: -0.011, d: 0.015 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingDistance {
    pub thinking: Metres,
    pub braking: Metres,
}

impl StoppingDistance {
    pub fn total(&self) -> Metres {
        self.thinking + self.braking
    }
}

pub fn stopping_distance(v: Mph, k: &StoppingCoefficients) -> Result<StoppingDistance, ModelError> {
    let v = v.0;
    if !v.is_finite() || v < 0.0 {
        return Err(ModelError::InvalidArgument(format!("speed {v} mph")));
    }
    Ok(StoppingDistance {
        thinking: Metres(k.a * v),
        braking: Metres(k.b + k.c * v + k.d * v * v),
    })
}

/// Danger-space length for a vehicle at `v`, equal to its stopping distance.
pub fn danger_space_length(v: MetresPerSecond) -> Result<Metres, ModelError> {
    Ok(stopping_distance(v.into(), &StoppingCoefficients::default())?.total())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProfileName {
    Relaxed,
    Nominal,
    Aggressive,
    Custom(String),
}

impl From<String> for ProfileName {
    fn from(s: String) -> Self {
        match s.as_str() {
            "relaxed" => ProfileName::Relaxed,
            "nominal" => ProfileName::Nominal,
            "aggressive" => ProfileName::Aggressive,
            _ => ProfileName::Custom(s),
        }
    }
}

impl From<ProfileName> for String {
    fn from(p: ProfileName) -> String {
        p.to_string()
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileName::Relaxed => f.write_str("relaxed"),
            ProfileName::Nominal => f.write_str("nominal"),
            ProfileName::Aggressive => f.write_str("aggressive"),
            ProfileName::Custom(s) => f.write_str(s),
        }
    }
}

impl Serialize for ProfileName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProfileName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(String::deserialize(d)?.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivingProfile {
    pub name: ProfileName,
    #[serde(rename = "pull_out_clearance_m")]
    pub pull_out_clearance: f64,
    #[serde(rename = "pull_out_angle_rad")]
    pub pull_out_angle: f64,
    #[serde(rename = "cut_in_clearance_m")]
    pub cut_in_clearance: f64,
    #[serde(rename = "cut_in_angle_rad")]
    pub cut_in_angle: f64,
}

impl DrivingProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (what, c) in [("pull-out clearance", self.pull_out_clearance), ("cut-in clearance", self.cut_in_clearance)] {
            if !c.is_finite() || c < 0.0 {
                return Err(ModelError::InvalidArgument(format!("{}: {what} {c}", self.name)));
            }
        }
        for (what, a) in [("pull-out angle", self.pull_out_angle), ("cut-in angle", self.cut_in_angle)] {
            if !(a > 0.0 && a < FRAC_PI_2) {
                return Err(ModelError::InvalidArgument(format!("{}: {what} {a} rad", self.name)));
            }
        }
        Ok(())
    }
}

/// Inputs to the manoeuvre-time model. Speeds are longitudinal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManoeuvreGeometry {
    pub lateral_offset: Metres,
    pub vbp_length: Metres,
    pub v_av: MetresPerSecond,
    pub v_vbp: MetresPerSecond,
    pub v_ov: MetresPerSecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManoeuvreTime {
    pub pull_out: Seconds,
    pub pass: Seconds,
    pub cut_in: Seconds,
}

impl ManoeuvreTime {
    pub fn total(&self) -> Seconds {
        self.pull_out + self.pass + self.cut_in
    }
}

fn non_negative(what: &str, v: f64) -> Result<f64, ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ModelError::InvalidArgument(format!("{what} {v}")))
    }
}

pub fn manoeuvre_time(p: &DrivingProfile, g: &ManoeuvreGeometry) -> Result<ManoeuvreTime, ModelError> {
    p.validate()?;
    let lat = non_negative("lateral offset", g.lateral_offset.0)?;
    let len = non_negative("vbp length", g.vbp_length.0)?;
    let v_av = non_negative("AV speed", g.v_av.0)?;
    let v_vbp = non_negative("VBP speed", g.v_vbp.0)?;
    if v_av <= v_vbp {
        return Err(ModelError::NoOvertakePossible { v_av, v_vbp });
    }
    Ok(ManoeuvreTime {
        pull_out: Seconds(lat / (v_av * p.pull_out_angle.tan())),
        pass: Seconds((p.pull_out_clearance + len + p.cut_in_clearance) / (v_av - v_vbp)),
        cut_in: Seconds(lat / (v_av * p.cut_in_angle.tan())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafeDistance {
    pub manoeuvre: ManoeuvreTime,
    /// Distance closed by AV and OV during the manoeuvre.
    pub travel: Metres,
    pub danger_space_ov: Metres,
}

impl SafeDistance {
    pub fn total(&self) -> Metres {
        self.travel + self.danger_space_ov
    }

    pub fn closing_speed(&self) -> MetresPerSecond {
        MetresPerSecond(self.travel.0 / self.manoeuvre.total().0)
    }
}

pub fn safe_distance_ahead(p: &DrivingProfile, g: &ManoeuvreGeometry) -> Result<SafeDistance, ModelError> {
    let manoeuvre = manoeuvre_time(p, g)?;
    let v_ov = non_negative("OV speed", g.v_ov.0)?;
    let closing = MetresPerSecond(g.v_av.0 + v_ov);
    Ok(SafeDistance {
        manoeuvre,
        travel: closing * manoeuvre.total(),
        danger_space_ov: danger_space_length(MetresPerSecond(v_ov))?,
    })
}

pub fn ttc(gap: Metres, closing: MetresPerSecond) -> Result<Seconds, ModelError> {
    if !(closing.0 > 0.0) {
        return Err(ModelError::UndefinedTtc(closing.0));
    }
    if !gap.0.is_finite() {
        return Err(ModelError::InvalidArgument(format!("gap {}", gap.0)));
    }
    Ok(gap / closing)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDefaults {
    pub lateral_offset_m: f64,
    pub vbp_length_m: f64,
}

/// Calibrated profiles plus the geometry they were calibrated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSet {
    pub geometry: GeometryDefaults,
    pub profiles: Vec<DrivingProfile>,
}

pub const DEFAULT_PROFILES_JSON: &str = include_str!("../config/profiles.json");

impl ProfileSet {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let set: ProfileSet = serde_json::from_str(text)?;
        for p in &set.profiles {
            p.validate()?;
        }
        Ok(set)
    }

    pub fn get(&self, name: &str) -> Result<&DrivingProfile, ModelError> {
        self.profiles
            .iter()
            .find(|p| p.name.to_string() == name)
            .ok_or_else(|| ModelError::UnknownProfile(name.to_string()))
    }

    /// Geometry at the calibration point for the given speeds.
    pub fn geometry_for(&self, v_av: MetresPerSecond, v_vbp: MetresPerSecond, v_ov: MetresPerSecond) -> ManoeuvreGeometry {
        ManoeuvreGeometry {
            lateral_offset: Metres(self.geometry.lateral_offset_m),
            vbp_length: Metres(self.geometry.vbp_length_m),
            v_av,
            v_vbp,
            v_ov,
        }
    }
}

impl Default for ProfileSet {
    fn default() -> Self {
        ProfileSet::from_json(DEFAULT_PROFILES_JSON).expect("bundled profiles are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sd(v: f64) -> f64 {
        stopping_distance(Mph(v), &StoppingCoefficients::default()).unwrap().total().0
    }

    #[test]
    fn stopping_distance_components() {
        let s = stopping_distance(Mph(20.0), &StoppingCoefficients::default()).unwrap();
        assert!((s.thinking.0 - 6.0).abs() < 1e-12);
        assert!((s.braking.0 - 5.838).abs() < 1e-12);
        assert!((sd(0.0) - 0.058).abs() < 1e-12);
        assert!(stopping_distance(Mph(-1.0), &StoppingCoefficients::default()).is_err());
    }

    #[test]
    fn nominal_at_25_mph() {
        let set = ProfileSet::default();
        let v = MetresPerSecond::from(Mph(25.0));
        let g = set.geometry_for(v, MetresPerSecond(0.0), v);
        let s = safe_distance_ahead(set.get("nominal").unwrap(), &g).unwrap();
        assert!((s.total().0 - 63.73).abs() < 1e-6);
        assert!((s.danger_space_ov.0 - 16.658).abs() < 1e-9);
    }

    #[test]
    fn slower_av_cannot_overtake() {
        let set = ProfileSet::default();
        let g = set.geometry_for(MetresPerSecond(10.0), MetresPerSecond(10.0), MetresPerSecond(10.0));
        assert!(matches!(
            manoeuvre_time(set.get("nominal").unwrap(), &g),
            Err(ModelError::NoOvertakePossible { .. })
        ));
    }

    #[test]
    fn ttc_needs_closing_speed() {
        assert!(ttc(Metres(10.0), MetresPerSecond(0.0)).is_err());
        assert_eq!(ttc(Metres(10.0), MetresPerSecond(5.0)).unwrap(), Seconds(2.0));
    }

    #[test]
    fn profile_names_round_trip() {
        for n in ["relaxed", "nominal", "aggressive", "mine"] {
            let p: ProfileName = n.to_string().into();
            assert_eq!(p.to_string(), n);
        }
        assert!(ProfileSet::default().get("sporty").is_err());
    }
}
