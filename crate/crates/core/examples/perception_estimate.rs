//! Render a scenario as camera detections, then rebuild a trace from the boxes.

use highway_assert::app::default_calibration;
use highway_assert::perception::{boxes_to_trace, synthesize_detections, EstimatorConfig};
use highway_assert::scenario::{generate, preset};

fn main() {
    let s = generate(&preset("occlusion_abort").unwrap()).unwrap();
    let cal = default_calibration();
    let dets = synthesize_detections(&s.trace, &cal);
    println!("{} detections", dets.len());

    let (est, warnings) = boxes_to_trace(&dets, &cal, &EstimatorConfig::default()).unwrap();
    println!("{} estimated steps, {} warnings", est.steps.len(), warnings.len());
    // Frames without any detection produce no step, so pair by timestamp.
    for guess in est.steps.iter().step_by(20) {
        let truth = s.trace.steps.iter().find(|st| st.t == guess.t).unwrap();
        let (Some(v0), Some(av0), Some(v1), Some(av1)) =
            (truth.actor("vbp"), truth.actor("av"), guess.resolve("vbp"), guess.resolve("av"))
        else {
            continue;
        };
        println!(
            "t={:>5.2}  VBP ahead true {:>6.2} m, estimated {:>6.2} m",
            truth.t,
            v0.pose.x - av0.pose.x,
            v1.pose.x - av1.pose.x
        );
    }
}
