//! Lanelet road map: loading, point and polygon queries, centreline tests.

use crate::geometry::{
    normalize_angle, overlap_area, overlaps_segment, ConvexPolygon, GeometryError, Point,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

pub type LaneletId = String;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("malformed map JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("lanelet {id}: {source}")]
    Polygon { id: String, source: GeometryError },
    #[error("duplicate lanelet id {0}")]
    DuplicateId(String),
    #[error("centreline needs at least 2 points")]
    ShortCentreline,
    #[error("lanelet {0}: width must be positive and finite")]
    BadWidth(String),
    #[error("unknown key {0}")]
    UnknownKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    WithMapAxis,
    AgainstMapAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lanelet {
    pub id: LaneletId,
    pub polygon: ConvexPolygon,
    pub orientation: f64,
    pub width: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadMap {
    pub lanelets: Vec<Lanelet>,
    pub centreline: Vec<Point>,
}

#[derive(Serialize, Deserialize)]
struct LaneletFile {
    id: String,
    vertices: Vec<[f64; 2]>,
    orientation_rad: f64,
    width_m: f64,
    direction: Direction,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    lanelets: Vec<LaneletFile>,
    centreline: Vec<[f64; 2]>,
}

const TOP_KEYS: &[&str] = &["lanelets", "centreline"];
const LANELET_KEYS: &[&str] = &["id", "vertices", "orientation_rad", "width_m", "direction"];

fn unknown_keys(value: &serde_json::Value) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(obj) = value.as_object() {
        out.extend(obj.keys().filter(|k| !TOP_KEYS.contains(&k.as_str())).cloned());
        if let Some(ls) = obj.get("lanelets").and_then(|l| l.as_array()) {
            for (i, l) in ls.iter().enumerate() {
                if let Some(lo) = l.as_object() {
                    out.extend(
                        lo.keys()
                            .filter(|k| !LANELET_KEYS.contains(&k.as_str()))
                            .map(|k| format!("lanelets[{i}].{k}")),
                    );
                }
            }
        }
    }
    out
}

/// Parse a map document. Unknown keys are errors in strict mode and
/// warnings (returned) in lenient mode.
pub fn load_map(text: &str, strictness: Strictness) -> Result<(RoadMap, Vec<String>), MapError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let unknown = unknown_keys(&value);
    let mut warnings = Vec::new();
    if let Some(k) = unknown.first() {
        if strictness == Strictness::Strict {
            return Err(MapError::UnknownKey(k.clone()));
        }
        for k in &unknown {
            log::warn!("ignoring unknown map key {k}");
            warnings.push(format!("unknown key {k}"));
        }
    }
    let file: MapFile = serde_json::from_value(value)?;
    let mut seen = BTreeSet::new();
    let mut lanelets = Vec::with_capacity(file.lanelets.len());
    for l in file.lanelets {
        if !seen.insert(l.id.clone()) {
            return Err(MapError::DuplicateId(l.id));
        }
        if !(l.width_m.is_finite() && l.width_m > 0.0) {
            return Err(MapError::BadWidth(l.id));
        }
        let pts = l.vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
        let polygon = ConvexPolygon::from_any_winding(pts)
            .map_err(|source| MapError::Polygon { id: l.id.clone(), source })?;
        lanelets.push(Lanelet {
            id: l.id,
            polygon,
            orientation: l.orientation_rad,
            width: l.width_m,
            direction: l.direction,
        });
    }
    if file.centreline.len() < 2 {
        return Err(MapError::ShortCentreline);
    }
    let centreline = file.centreline.iter().map(|v| Point::new(v[0], v[1])).collect();
    Ok((RoadMap { lanelets, centreline }, warnings))
}

/// Which lanes to test containment against.
#[derive(Debug, Clone, PartialEq)]
pub enum LaneSelector {
    /// Lanelets whose travel direction agrees with the heading.
    Running(f64),
    /// Lanelets whose travel direction opposes the heading.
    Oncoming(f64),
    Id(LaneletId),
}

impl RoadMap {
    pub fn to_json(&self) -> String {
        let file = MapFile {
            lanelets: self
                .lanelets
                .iter()
                .map(|l| LaneletFile {
                    id: l.id.clone(),
                    vertices: l.polygon.vertices().iter().map(|p| [p.x, p.y]).collect(),
                    orientation_rad: l.orientation,
                    width_m: l.width,
                    direction: l.direction,
                })
                .collect(),
            centreline: self.centreline.iter().map(|p| [p.x, p.y]).collect(),
        };
        serde_json::to_string_pretty(&file).expect("map serialises")
    }

    pub fn lanelet(&self, id: &str) -> Option<&Lanelet> {
        self.lanelets.iter().find(|l| l.id == id)
    }

    /// Lanelet containing the point. On shared boundaries the lanelet that
    /// holds the point strictly inside wins; otherwise the smallest id.
    pub fn lanelet_at(&self, p: Point) -> Option<&Lanelet> {
        let mut hits: Vec<&Lanelet> = self.lanelets.iter().filter(|l| l.polygon.contains(p)).collect();
        if hits.len() <= 1 {
            return hits.pop();
        }
        let interior = |l: &Lanelet| {
            l.polygon.edges().all(|(a, b)| (b - a).cross(p - a) > 0.0)
        };
        let mut strict: Vec<&Lanelet> = hits.iter().copied().filter(|l| interior(l)).collect();
        if !strict.is_empty() {
            strict.sort_by(|a, b| {
                a.polygon.area().total_cmp(&b.polygon.area()).then_with(|| a.id.cmp(&b.id))
            });
            return Some(strict[0]);
        }
        hits.sort_by(|a, b| a.id.cmp(&b.id));
        Some(hits[0])
    }

    /// The containing lanelet, or the nearest one for off-road points.
    pub fn nearest_lanelet(&self, p: Point) -> Option<&Lanelet> {
        self.lanelet_at(p).or_else(|| {
            self.lanelets.iter().min_by(|a, b| {
                a.polygon
                    .distance_to_point(p)
                    .total_cmp(&b.polygon.distance_to_point(p))
                    .then_with(|| a.id.cmp(&b.id))
            })
        })
    }

    pub fn lane_orientation(&self, p: Point) -> Option<f64> {
        self.nearest_lanelet(p).map(|l| l.orientation)
    }

    /// All lanelets sharing positive area with the polygon.
    pub fn lanelets_containing(&self, poly: &ConvexPolygon) -> Vec<(LaneletId, f64)> {
        self.lanelets
            .iter()
            .filter_map(|l| {
                let a = overlap_area(&l.polygon, poly);
                (a > 1e-12).then(|| (l.id.clone(), a))
            })
            .collect()
    }

    /// Closed intersection with the centreline polyline.
    pub fn crosses_centreline(&self, poly: &ConvexPolygon) -> bool {
        self.centreline.windows(2).any(|w| overlaps_segment(poly, w[0], w[1]))
    }

    fn selected(&self, sel: &LaneSelector) -> Vec<&Lanelet> {
        self.lanelets
            .iter()
            .filter(|l| match sel {
                LaneSelector::Running(h) => normalize_angle(h - l.orientation).cos() > 0.0,
                LaneSelector::Oncoming(h) => normalize_angle(h - l.orientation).cos() < 0.0,
                LaneSelector::Id(id) => &l.id == id,
            })
            .collect()
    }

    /// True when the polygon lies entirely inside the selected lanes.
    pub fn within(&self, poly: &ConvexPolygon, sel: &LaneSelector) -> bool {
        let total = poly.area();
        let inside: f64 = self.selected(sel).iter().map(|l| overlap_area(&l.polygon, poly)).sum();
        inside >= total * (1.0 - 1e-9)
    }

    /// True when the polygon touches any of the selected lanes.
    pub fn touches(&self, poly: &ConvexPolygon, sel: &LaneSelector) -> bool {
        self.selected(sel).iter().any(|l| crate::geometry::overlaps(&l.polygon, poly))
    }
}

/// Straight two-lane road along +x: lanelet "1" eastbound below the
/// centreline, lanelet "2" westbound above it.
pub fn two_lane_road(length: f64, lane_width: f64) -> RoadMap {
    use std::f64::consts::PI;
    let rect = |y0: f64, y1: f64| {
        ConvexPolygon::new(vec![
            Point::new(0.0, y0),
            Point::new(length, y0),
            Point::new(length, y1),
            Point::new(0.0, y1),
        ])
        .expect("rectangle")
    };
    RoadMap {
        lanelets: vec![
            Lanelet {
                id: "1".into(),
                polygon: rect(-lane_width, 0.0),
                orientation: 0.0,
                width: lane_width,
                direction: Direction::WithMapAxis,
            },
            Lanelet {
                id: "2".into(),
                polygon: rect(0.0, lane_width),
                orientation: PI,
                width: lane_width,
                direction: Direction::AgainstMapAxis,
            },
        ],
        centreline: vec![Point::new(0.0, 0.0), Point::new(length, 0.0)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{oriented_box, Pose};

    const DOC: &str = r#"{
        "lanelets": [
            {"id": "1", "vertices": [[0,-3.65],[100,-3.65],[100,0],[0,0]], "orientation_rad": 0.0, "width_m": 3.65, "direction": "with_map_axis"},
            {"id": "2", "vertices": [[0,0],[100,0],[100,3.65],[0,3.65]], "orientation_rad": 3.141592653589793, "width_m": 3.65, "direction": "against_map_axis"}
        ],
        "centreline": [[0,0],[100,0]]
    }"#;

    #[test]
    fn load_and_query() {
        let (map, w) = load_map(DOC, Strictness::Strict).unwrap();
        assert!(w.is_empty());
        assert_eq!(map.lanelet_at(Point::new(10.0, -1.0)).unwrap().id, "1");
        assert_eq!(map.lanelet_at(Point::new(10.0, 1.0)).unwrap().id, "2");
        // On the shared edge neither is strictly interior: smallest id.
        assert_eq!(map.lanelet_at(Point::new(10.0, 0.0)).unwrap().id, "1");
        assert!(map.lanelet_at(Point::new(10.0, 9.0)).is_none());
        assert_eq!(map.nearest_lanelet(Point::new(10.0, 9.0)).unwrap().id, "2");
    }

    #[test]
    fn strict_rejects_unknown_keys() {
        let doc = DOC.replacen("\"centreline\"", "\"extra\": 1, \"centreline\"", 1);
        assert!(matches!(load_map(&doc, Strictness::Strict), Err(MapError::UnknownKey(_))));
        let (_, w) = load_map(&doc, Strictness::Lenient).unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn rejects_duplicates_and_short_centreline() {
        let dup = DOC.replacen("\"id\": \"2\"", "\"id\": \"1\"", 1);
        assert!(matches!(load_map(&dup, Strictness::Strict), Err(MapError::DuplicateId(_))));
        let short = DOC.replace("\"centreline\": [[0,0],[100,0]]", "\"centreline\": [[0,0]]");
        assert!(matches!(load_map(&short, Strictness::Strict), Err(MapError::ShortCentreline)));
    }

    #[test]
    fn box_straddling_centreline() {
        let map = two_lane_road(100.0, 3.65);
        let b = oriented_box(&Pose::new(50.0, 0.0, 0.0), 4.5, 1.8).unwrap();
        assert!(map.crosses_centreline(&b));
        let parts = map.lanelets_containing(&b);
        assert_eq!(parts.len(), 2);
        let sum: f64 = parts.iter().map(|p| p.1).sum();
        assert!((sum - b.area()).abs() < 1e-9);
        let inside = oriented_box(&Pose::new(50.0, -1.825, 0.0), 4.5, 1.8).unwrap();
        assert!(!map.crosses_centreline(&inside));
        assert!(map.within(&inside, &LaneSelector::Running(0.0)));
        assert!(!map.within(&b, &LaneSelector::Running(0.0)));
    }

    #[test]
    fn round_trip_json() {
        let map = two_lane_road(150.0, 3.65);
        let (back, _) = load_map(&map.to_json(), Strictness::Strict).unwrap();
        assert_eq!(back, map);
    }
}
