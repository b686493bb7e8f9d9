use highway_assert::models::{stopping_distance, StoppingCoefficients};
use highway_assert::units::Mph;

fn main() {
    let k = StoppingCoefficients::default();
    println!("{:>5} {:>9} {:>9} {:>9}", "mph", "thinking", "braking", "total");
    for v in (10..=70).step_by(10) {
        let sd = stopping_distance(Mph(v as f64), &k).unwrap();
        println!("{:>5} {:>9.3} {:>9.3} {:>9.3}", v, sd.thinking.0, sd.braking.0, sd.total().0);
    }
}
