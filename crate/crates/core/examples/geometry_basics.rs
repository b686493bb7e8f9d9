//! Vehicle boxes, danger spaces and the intersection queries behind the rules.

use highway_assert::geometry::{danger_space, min_distance, oriented_box, overlap_area, overlaps, Pose};

fn main() {
    let av = Pose::new(0.0, -1.825, 0.0);
    let vbp = Pose::new(20.0, -1.825, 0.0);
    let av_box = oriented_box(&av, 4.5, 1.8).unwrap();
    let vbp_box = oriented_box(&vbp, 4.5, 1.8).unwrap();
    let ds = danger_space(&av, 4.5, 1.8, 16.658).unwrap();

    println!("gap between boxes: {:.3} m", min_distance(&av_box, &vbp_box));
    println!("AV danger space reaches VBP: {}", overlaps(&ds, &vbp_box));
    println!("overlap area: {:.3} m^2", overlap_area(&ds, &vbp_box));

    let turned = Pose::new(0.0, -1.825, 0.26);
    let ds2 = danger_space(&turned, 4.5, 1.8, 16.658).unwrap();
    println!("after pulling out by 0.26 rad: overlaps = {}", overlaps(&ds2, &vbp_box));
}
