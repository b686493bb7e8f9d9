//! The three fixed-gap scenarios evaluated under each profile.

use highway_assert::engine::{evaluate, EvaluationContext, Outcome};
use highway_assert::models::ProfileSet;
use highway_assert::rulepack::{overtaking, RULE162_SDA};
use highway_assert::scenario::{generate, preset};

fn main() {
    let defs = overtaking();
    let set = ProfileSet::default();
    println!("{:<10} {:>8} {:>9} {:>8} {:>10}", "scenario", "DA (m)", "relaxed", "nominal", "aggressive");
    for name in ["safe", "near_miss", "collision"] {
        let s = generate(&preset(name).unwrap()).unwrap();
        let mut cells = Vec::new();
        let mut da = f64::NAN;
        for p in &set.profiles {
            let mut ctx = EvaluationContext::new(s.map.clone(), ["two_lane_road".to_string()]);
            ctx.config.profile = p.clone();
            let v = evaluate(&defs, &s.trace, &ctx);
            let sda = v.iter().find(|v| v.assertion_id == RULE162_SDA).unwrap();
            da = sda.measured().unwrap_or(f64::NAN);
            cells.push(if sda.result == Outcome::Pass { "PASS" } else { "FAIL" });
        }
        println!("{:<10} {:>8.2} {:>9} {:>8} {:>10}", name, da, cells[0], cells[1], cells[2]);
    }
}
