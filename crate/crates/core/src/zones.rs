//! Safety and performance zones for an overtaking opportunity.
//!
//! A: the gap is at or below the safe distance. B: inside the safety margin
//! above it. D: so much spare time that declining would be over-cautious.
//! C: everything else, the region a well-tuned profile aims for.

use crate::engine::Verdict;
use crate::models::{safe_distance_ahead, DrivingProfile, ManoeuvreGeometry, ModelError, ProfileSet};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ZoneError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneThresholds {
    pub safety_margin_fraction: f64,
    pub ttc_conservative_s: f64,
}

impl Default for ZoneThresholds {
    fn default() -> Self {
        ZoneThresholds { safety_margin_fraction: 0.1, ttc_conservative_s: 2.5 }
    }
}

pub fn classify(da: f64, sda: f64, ttc: f64, th: &ZoneThresholds) -> Result<Zone, ZoneError> {
    if !(sda.is_finite() && sda > 0.0) {
        return Err(ZoneError::InvalidArgument(format!("safe distance {sda} m")));
    }
    if !(th.safety_margin_fraction >= 0.0) {
        return Err(ZoneError::InvalidArgument(format!("margin {}", th.safety_margin_fraction)));
    }
    Ok(if da <= sda {
        Zone::A
    } else if da <= sda * (1.0 + th.safety_margin_fraction) {
        Zone::B
    } else if ttc > th.ttc_conservative_s {
        Zone::D
    } else {
        Zone::C
    })
}

/// Time left to the OV once the modelled manoeuvre completes.
pub fn residual_ttc(da: f64, closing_speed: f64, manoeuvre_time: f64) -> f64 {
    if closing_speed > 0.0 {
        da / closing_speed - manoeuvre_time
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileChoice {
    pub profile: DrivingProfile,
    pub zone: Zone,
    pub sda: f64,
    pub ttc: f64,
    /// Set when no profile reaches zone C and the choice sits in zone D.
    pub conservative: bool,
}

/// Least aggressive profile landing in zone C, else the least aggressive in
/// zone D (flagged), else none. `profiles` runs from relaxed to aggressive.
pub fn optimal_profile(
    da: f64,
    profiles: &[DrivingProfile],
    geom: &ManoeuvreGeometry,
    th: &ZoneThresholds,
) -> Result<Option<ProfileChoice>, ZoneError> {
    let mut fallback = None;
    for p in profiles {
        let s = safe_distance_ahead(p, geom)?;
        let ttc = residual_ttc(da, s.closing_speed().0, s.manoeuvre.total().0);
        let zone = classify(da, s.total().0, ttc, th)?;
        let choice = ProfileChoice { profile: p.clone(), zone, sda: s.total().0, ttc, conservative: false };
        match zone {
            Zone::C => return Ok(Some(choice)),
            Zone::D if fallback.is_none() => fallback = Some(ProfileChoice { conservative: true, ..choice }),
            _ => {}
        }
    }
    Ok(fallback)
}

pub fn optimal_default_profile(da: f64, geom: &ManoeuvreGeometry) -> Result<Option<ProfileChoice>, ZoneError> {
    optimal_profile(da, &ProfileSet::default().profiles, geom, &ZoneThresholds::default())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneRow {
    pub t: f64,
    pub assertion_id: String,
    pub da: f64,
    pub sda: f64,
    pub ttc: f64,
    pub zone: Zone,
}

/// Zone rows for every verdict that carries a distance-ahead comparison
/// against a safe distance, with the manoeuvre time and closing speed.
pub fn zone_rows(verdicts: &[Verdict], th: &ZoneThresholds) -> Result<Vec<ZoneRow>, ZoneError> {
    let mut rows = Vec::new();
    for v in verdicts {
        let get = |k: &str| v.detail.get(k).and_then(|x| x.as_f64());
        let (Some(da), Some(sda), Some(closing), Some(time)) =
            (v.measured(), v.threshold(), get("closing_speed_mps"), get("manoeuvre_time_s"))
        else {
            continue;
        };
        let ttc = residual_ttc(da, closing, time);
        rows.push(ZoneRow { t: v.t, assertion_id: v.assertion_id.clone(), da, sda, ttc, zone: classify(da, sda, ttc, th)? });
    }
    Ok(rows)
}

pub fn zone_csv(rows: &[ZoneRow]) -> String {
    let mut s = String::from("t,assertion_id,da,sda,ttc,zone\n");
    for r in rows {
        s.push_str(&format!("{},{},{:.3},{:.3},{:.3},{}\n", r.t, r.assertion_id, r.da, r.sda, r.ttc, r.zone));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{MetresPerSecond, Mph};

    fn geom() -> ManoeuvreGeometry {
        let v: MetresPerSecond = Mph(25.0).into();
        ProfileSet::default().geometry_for(v, MetresPerSecond(0.0), v)
    }

    #[test]
    fn classification_examples() {
        let th = ZoneThresholds::default();
        assert_eq!(classify(35.63, 40.02, 1.0, &th).unwrap(), Zone::A);
        assert_eq!(classify(40.02 * 1.01, 40.02, 1.0, &th).unwrap(), Zone::B);
        assert_eq!(classify(76.43, 63.73, 2.0, &th).unwrap(), Zone::C);
        assert_eq!(classify(500.0, 63.73, 20.0, &th).unwrap(), Zone::D);
        assert!(classify(1.0, 0.0, 1.0, &th).is_err());
    }

    #[test]
    fn optimal_profile_examples() {
        let c = optimal_default_profile(76.43, &geom()).unwrap().unwrap();
        assert_eq!(c.profile.name.to_string(), "nominal");
        assert_eq!(c.zone, Zone::C);
        assert!(optimal_default_profile(35.63, &geom()).unwrap().is_none());
        let far = optimal_default_profile(1000.0, &geom()).unwrap().unwrap();
        assert_eq!((far.profile.name.to_string().as_str(), far.zone, far.conservative), ("relaxed", Zone::D, true));
    }
}
