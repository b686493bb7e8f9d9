//! Brute-force geometry used as an independent reference.

use highway_assert::geometry::{ConvexPolygon, Point};

pub fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let s = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    ((p.x - a.x - s * dx).powi(2) + (p.y - a.y - s * dy).powi(2)).sqrt()
}

pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

pub fn edges(p: &ConvexPolygon) -> Vec<(Point, Point)> {
    let v = p.vertices();
    (0..v.len()).map(|i| (v[i], v[(i + 1) % v.len()])).collect()
}

pub fn inside(p: Point, poly: &ConvexPolygon) -> bool {
    edges(poly).iter().all(|&(a, b)| orient(a, b, p) >= 0.0)
}

pub fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(a, b, c), orient(a, b, d));
    let (d3, d4) = (orient(c, d, a), orient(c, d, b));
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0
}

pub fn oracle_intersects(a: &ConvexPolygon, b: &ConvexPolygon) -> bool {
    a.vertices().iter().any(|&p| inside(p, b))
        || b.vertices().iter().any(|&p| inside(p, a))
        || edges(a).iter().any(|&(p, q)| edges(b).iter().any(|&(r, s)| segments_cross(p, q, r, s)))
}

/// Smallest vertex-to-edge distance in either direction; the true gap when disjoint.
pub fn vertex_edge_min(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let one = |x: &ConvexPolygon, y: &ConvexPolygon| {
        x.vertices()
            .iter()
            .flat_map(|&p| edges(y).into_iter().map(move |(s, t)| seg_dist(p, s, t)))
            .fold(f64::INFINITY, f64::min)
    };
    one(a, b).min(one(b, a))
}

pub fn grid_area(a: &ConvexPolygon, b: &ConvexPolygon, n: usize) -> f64 {
    let bb = |p: &ConvexPolygon| {
        p.vertices().iter().fold((f64::MAX, f64::MAX, f64::MIN, f64::MIN), |(x0, y0, x1, y1), v| {
            (x0.min(v.x), y0.min(v.y), x1.max(v.x), y1.max(v.y))
        })
    };
    let (a0, a1, a2, a3) = bb(a);
    let (b0, b1, b2, b3) = bb(b);
    let (x0, y0, x1, y1) = (a0.max(b0), a1.max(b1), a2.min(b2), a3.min(b3));
    if x0 >= x1 || y0 >= y1 {
        return 0.0;
    }
    let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let mut hits = 0usize;
    for i in 0..n {
        for j in 0..n {
            let p = Point::new(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy);
            if inside(p, a) && inside(p, b) {
                hits += 1;
            }
        }
    }
    hits as f64 * hx * hy
}

pub fn shoelace(p: &ConvexPolygon) -> f64 {
    edges(p).iter().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>() / 2.0
}

/// Oriented box or hull of a small point cloud, about half the time each.
pub fn random_poly(rng: &mut rand_chacha::ChaCha8Rng) -> ConvexPolygon {
    use highway_assert::geometry::{oriented_box, Pose};
    use rand::Rng;
    loop {
        if rng.random_bool(0.5) {
            let pose = Pose::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-4.0..4.0));
            return oriented_box(&pose, rng.random_range(0.5..15.0), rng.random_range(0.5..5.0)).unwrap();
        }
        let (cx, cy) = (rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0));
        let pts: Vec<Point> = (0..rng.random_range(3..9))
            .map(|_| Point::new(cx + rng.random_range(-8.0..8.0), cy + rng.random_range(-8.0..8.0)))
            .collect();
        if let Some(p) = ConvexPolygon::hull(&pts).ok().filter(|p| p.area() > 0.5) {
            return p;
        }
    }
}
