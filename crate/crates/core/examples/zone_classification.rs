use highway_assert::models::ProfileSet;
use highway_assert::units::{MetresPerSecond, Mph};
use highway_assert::zones::optimal_default_profile;

fn main() {
    let set = ProfileSet::default();
    let v: MetresPerSecond = Mph(25.0).into();
    let geom = set.geometry_for(v, MetresPerSecond(0.0), v);
    for da in [35.63, 45.0, 58.33, 70.0, 76.43, 110.0, 150.0, 400.0] {
        match optimal_default_profile(da, &geom).unwrap() {
            Some(c) => println!(
                "DA {:>7.2} m -> {:<10} zone {} (SDA {:.2} m, spare {:.2} s{})",
                da,
                c.profile.name.to_string(),
                c.zone,
                c.sda,
                c.ttc,
                if c.conservative { ", conservative" } else { "" }
            ),
            None => println!("DA {da:>7.2} m -> no safe profile, do not overtake"),
        }
    }
}
