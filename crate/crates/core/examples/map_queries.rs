use highway_assert::geometry::{oriented_box, Point, Pose};
use highway_assert::worldmap::{load_map, two_lane_road, Strictness};

fn main() {
    let map = two_lane_road(200.0, 3.65);
    let json = map.to_json();
    let (map, warnings) = load_map(&json, Strictness::Strict).unwrap();
    println!("{} lanelets, {} warnings", map.lanelets.len(), warnings.len());

    for p in [Point::new(10.0, -1.0), Point::new(10.0, 1.0), Point::new(10.0, 9.0)] {
        let lane = map.lanelet_at(p).map(|l| l.id.to_string());
        println!("({}, {}) -> lanelet {:?}, orientation {:?}", p.x, p.y, lane, map.lane_orientation(p));
    }

    for y in [-1.825, -0.5, 1.825] {
        let car = oriented_box(&Pose::new(50.0, y, 0.0), 4.5, 1.8).unwrap();
        println!(
            "car at y={y:>6}: crosses centreline {}, lanelets {:?}",
            map.crosses_centreline(&car),
            map.lanelets_containing(&car)
        );
    }
}
