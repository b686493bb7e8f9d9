//! Safe distance ahead for each driving profile with everyone at 25 mph
//! and a stationary VBP.

use highway_assert::models::{safe_distance_ahead, ProfileSet};
use highway_assert::units::{MetresPerSecond, Mph};

fn main() {
    let set = ProfileSet::default();
    let v: MetresPerSecond = Mph(25.0).into();
    let geom = set.geometry_for(v, MetresPerSecond(0.0), v);
    for p in &set.profiles {
        let s = safe_distance_ahead(p, &geom).unwrap();
        println!(
            "{:<10} manoeuvre {:>6.3} s  travel {:>7.3} m  DS_OV {:>6.3} m  SDA {:>7.3} m",
            p.name.to_string(),
            s.manoeuvre.total().0,
            s.travel.0,
            s.danger_space_ov.0,
            s.total().0
        );
    }
}
