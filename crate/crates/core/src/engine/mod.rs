//! Assertion semantics: verdicts for invariants, execution conditions and
//! temporal or physical pre/postconditions, in batch and streaming form.

mod debounce;
mod report;
mod stream;

pub use crate::dsl::ast::{ReferenceMode, Severity};
pub use debounce::{debounce, Debouncer};
pub use report::{summarize, summary_csv, verdicts_jsonl, SummaryRow};
pub use stream::{StreamEngine, StreamError};

use crate::dsl::compile::Node;
use crate::dsl::eval::{eval_bool, Env, EvalConfig, Scratch};
use crate::trace::{Step, StepSource, Trace};
use crate::worldmap::RoadMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Slack when snapping window edges onto timestamps.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AssertionKind {
    Invariant,
    ExecutionCondition,
    PreconditionTemporal { window: f64 },
    PreconditionPhysical { offset: f64 },
    PostconditionTemporal { window: f64 },
    PostconditionPhysical { offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionDef {
    pub id: String,
    pub odd_tags: BTreeSet<String>,
    pub kind: AssertionKind,
    pub reference: Option<Node>,
    pub condition: Node,
    pub severity: Severity,
    pub reference_mode: ReferenceMode,
    /// Future steps needed before a timestep can be evaluated.
    pub lookahead: usize,
}

impl AssertionDef {
    pub fn applies_to(&self, active_odd: &BTreeSet<String>) -> bool {
        self.odd_tags.is_empty() || !self.odd_tags.is_disjoint(active_odd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
}

pub type Detail = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub assertion_id: String,
    pub t: f64,
    pub result: Outcome,
    #[serde(default)]
    pub detail: Detail,
}

impl Verdict {
    fn new(id: &str, t: f64, result: Outcome, detail: Detail) -> Verdict {
        Verdict { assertion_id: id.to_string(), t, result, detail }
    }

    pub fn measured(&self) -> Option<f64> {
        self.detail.get("measured").and_then(|v| v.as_f64())
    }

    pub fn threshold(&self) -> Option<f64> {
        self.detail.get("threshold").and_then(|v| v.as_f64())
    }
}

#[derive(Debug, Clone)]
pub struct EvaluationContext {
    pub map: RoadMap,
    pub config: EvalConfig,
    pub active_odd: BTreeSet<String>,
    /// Missing window data fails when strict, is not applicable otherwise.
    pub strict_windows: bool,
}

impl EvaluationContext {
    pub fn new(map: RoadMap, active_odd: impl IntoIterator<Item = String>) -> Self {
        EvaluationContext {
            map,
            config: EvalConfig::default(),
            active_odd: active_odd.into_iter().collect(),
            strict_windows: true,
        }
    }
}

/// Condition outcome at one timestep with its measurements.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CondResult {
    pub holds: bool,
    pub detail: Detail,
}

fn num(v: f64) -> serde_json::Value {
    serde_json::Value::from(v)
}

pub(crate) fn eval_condition(def: &AssertionDef, src: &dyn StepSource, i: usize, ctx: &EvaluationContext) -> CondResult {
    let env = Env { src, index: i, map: &ctx.map, config: &ctx.config };
    let mut scratch = Scratch::default();
    let r = eval_bool(&def.condition, &env, &mut scratch);
    let mut detail = Detail::new();
    let holds = match r {
        Ok(b) => {
            let root_cmp = matches!(&def.condition, Node::Binary(op, ..) if op.is_comparison());
            let obs = if root_cmp { scratch.observations.last() } else { scratch.observations.first() };
            let (m, th) = obs.copied().unwrap_or((if b { 1.0 } else { 0.0 }, 1.0));
            detail.insert("measured".into(), num(m));
            detail.insert("threshold".into(), num(th));
            b
        }
        Err(e) => {
            detail.insert("reason".into(), e.to_string().into());
            false
        }
    };
    for (k, v) in scratch.extras {
        detail.insert(k.to_string(), num(v));
    }
    if scratch.low_confidence {
        detail.insert("low_confidence".into(), true.into());
    }
    CondResult { holds, detail }
}

/// Evaluation errors in a reference expression mean it does not fire.
pub(crate) fn eval_reference(def: &AssertionDef, src: &dyn StepSource, i: usize, ctx: &EvaluationContext) -> bool {
    let Some(r) = &def.reference else { return true };
    let env = Env { src, index: i, map: &ctx.map, config: &ctx.config };
    eval_bool(r, &env, &mut Scratch::default()).unwrap_or(false)
}

pub(crate) fn step_verdict(id: &str, t: f64, c: &CondResult) -> Verdict {
    let result = if c.holds { Outcome::Pass } else { Outcome::Fail };
    Verdict::new(id, t, result, c.detail.clone())
}

pub(crate) fn reason_verdict(id: &str, t: f64, result: Outcome, reason: &str) -> Verdict {
    let mut d = Detail::new();
    d.insert("reason".into(), reason.into());
    Verdict::new(id, t, result, d)
}

pub(crate) fn insufficient(id: &str, t: f64, strict: bool) -> Verdict {
    let result = if strict { Outcome::Fail } else { Outcome::NotApplicable };
    reason_verdict(id, t, result, "insufficient-data")
}

/// Verdict over a window of (time, condition) samples in time order.
pub(crate) fn window_verdict<'a>(
    id: &str,
    t_ref: f64,
    items: impl Iterator<Item = (f64, &'a CondResult)>,
    complete: bool,
    strict: bool,
) -> Verdict {
    let mut count = 0usize;
    let mut last: Option<&CondResult> = None;
    for (t, c) in items {
        if !c.holds {
            let mut v = step_verdict(id, t_ref, c);
            v.detail.insert("failed_at".into(), num(t));
            return v;
        }
        count += 1;
        last = Some(c);
    }
    match last {
        Some(c) if complete => {
            let mut v = step_verdict(id, t_ref, c);
            v.detail.insert("window_steps".into(), count.into());
            v
        }
        _ => insufficient(id, t_ref, strict),
    }
}

pub(crate) fn point_verdict(id: &str, t_ref: f64, at: Option<(f64, &CondResult)>, strict: bool) -> Verdict {
    match at {
        Some((t, c)) => {
            let mut v = step_verdict(id, t_ref, c);
            v.detail.insert("evaluated_at".into(), num(t));
            v
        }
        None => insufficient(id, t_ref, strict),
    }
}

/// Index of the sample nearest `target`; ties go to the earlier sample.
pub(crate) fn nearest(samples: impl Iterator<Item = (usize, f64)>, target: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in samples {
        let d = (t - target).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|b| b.0)
}

/// Timestamps where the reference fires, honouring the reference mode.
pub fn find_reference_points(def: &AssertionDef, trace: &Trace, ctx: &EvaluationContext) -> Vec<f64> {
    reference_indices(def, &trace.steps, ctx).into_iter().map(|i| trace.steps[i].t).collect()
}

fn reference_indices(def: &AssertionDef, steps: &[Step], ctx: &EvaluationContext) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..steps.len() {
        if eval_reference(def, &steps, i, ctx) {
            out.push(i);
            if def.reference_mode == ReferenceMode::First {
                break;
            }
        }
    }
    out
}

fn evaluate_one(def: &AssertionDef, steps: &[Step], ctx: &EvaluationContext) -> Vec<Verdict> {
    let (Some(first), Some(last)) = (steps.first(), steps.last()) else {
        return Vec::new();
    };
    let id = def.id.as_str();
    if !def.applies_to(&ctx.active_odd) {
        return vec![reason_verdict(id, first.t, Outcome::NotApplicable, "odd-excluded")];
    }
    let cond = |i: usize| eval_condition(def, &steps, i, ctx);
    if def.kind == AssertionKind::Invariant {
        return (0..steps.len()).map(|i| step_verdict(id, steps[i].t, &cond(i))).collect();
    }
    let refs = reference_indices(def, steps, ctx);
    if refs.is_empty() {
        return vec![reason_verdict(id, last.t, Outcome::NotApplicable, "no-reference")];
    }
    let strict = ctx.strict_windows;
    refs.into_iter()
        .map(|r| {
            let t_r = steps[r].t;
            match def.kind {
                AssertionKind::Invariant | AssertionKind::ExecutionCondition => step_verdict(id, t_r, &cond(r)),
                AssertionKind::PreconditionTemporal { window } => {
                    let lo = t_r - window - TIME_EPS;
                    let cs: Vec<(f64, CondResult)> =
                        (0..r).filter(|&j| steps[j].t >= lo).map(|j| (steps[j].t, cond(j))).collect();
                    let complete = first.t <= t_r - window + TIME_EPS;
                    window_verdict(id, t_r, cs.iter().map(|(t, c)| (*t, c)), complete, strict)
                }
                AssertionKind::PostconditionTemporal { window } => {
                    let hi = t_r + window + TIME_EPS;
                    let cs: Vec<(f64, CondResult)> = (r + 1..steps.len())
                        .filter(|&j| steps[j].t <= hi)
                        .map(|j| (steps[j].t, cond(j)))
                        .collect();
                    let complete = last.t >= t_r + window - TIME_EPS;
                    window_verdict(id, t_r, cs.iter().map(|(t, c)| (*t, c)), complete, strict)
                }
                AssertionKind::PreconditionPhysical { offset } => {
                    let target = t_r - offset;
                    let at = (target >= first.t - TIME_EPS)
                        .then(|| nearest((0..=r).map(|j| (j, steps[j].t)), target))
                        .flatten();
                    let c = at.map(|j| (steps[j].t, cond(j)));
                    point_verdict(id, t_r, c.as_ref().map(|(t, c)| (*t, c)), strict)
                }
                AssertionKind::PostconditionPhysical { offset } => {
                    let target = t_r + offset;
                    let at = (target <= last.t + TIME_EPS)
                        .then(|| nearest((r..steps.len()).map(|j| (j, steps[j].t)), target))
                        .flatten();
                    let c = at.map(|j| (steps[j].t, cond(j)));
                    point_verdict(id, t_r, c.as_ref().map(|(t, c)| (*t, c)), strict)
                }
            }
        })
        .collect()
}

/// Evaluate assertions over a whole trace. Output is ordered by (t, assertion_id).
pub fn evaluate(assertions: &[AssertionDef], trace: &Trace, ctx: &EvaluationContext) -> Vec<Verdict> {
    let mut out: Vec<Verdict> = assertions.iter().flat_map(|d| evaluate_one(d, &trace.steps, ctx)).collect();
    sort_verdicts(&mut out);
    out
}

pub fn sort_verdicts(v: &mut [Verdict]) {
    v.sort_by(|a, b| a.t.total_cmp(&b.t).then_with(|| a.assertion_id.cmp(&b.assertion_id)));
}

/// True when any safety-severity assertion produced a FAIL.
pub fn has_safety_failure(assertions: &[AssertionDef], verdicts: &[Verdict]) -> bool {
    let safety: BTreeSet<&str> = assertions
        .iter()
        .filter(|a| a.severity == Severity::Safety)
        .map(|a| a.id.as_str())
        .collect();
    verdicts.iter().any(|v| v.result == Outcome::Fail && safety.contains(v.assertion_id.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::compile;
    use crate::geometry::Pose;
    use crate::trace::{ActorState, Role};
    use crate::worldmap::two_lane_road;

    fn trace(n: usize, dt: f64) -> Trace {
        let steps = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                Step {
                    t,
                    actors: vec![ActorState {
                        actor_id: "av".into(),
                        role: Role::Av,
                        pose: Pose::new(10.0 * t, -1.8, 0.0),
                        length: 4.5,
                        width: 1.8,
                        recorded_speed: None,
                        low_confidence: false,
                    }],
                }
            })
            .collect();
        Trace::from_steps(steps)
    }

    fn ctx() -> EvaluationContext {
        EvaluationContext::new(two_lane_road(500.0, 3.65), ["x".to_string()])
    }

    fn run(src: &str, tr: &Trace) -> Vec<Verdict> {
        evaluate(&compile(src).unwrap(), tr, &ctx())
    }

    #[test]
    fn invariant_true_passes_every_step() {
        let v = run("assertion a { odd: x type: invariant condition: true }", &trace(10, 0.1));
        assert_eq!(v.len(), 10);
        assert!(v.iter().all(|v| v.result == Outcome::Pass));
    }

    #[test]
    fn odd_exclusion() {
        let v = run("assertion a { odd: highway type: invariant condition: true }", &trace(10, 0.1));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].result, Outcome::NotApplicable);
    }

    #[test]
    fn reference_modes() {
        let src = "assertion a { odd: x type: execution reference: true mode: all condition: time() >= 0.5s }";
        let v = run(src, &trace(10, 0.1));
        assert_eq!(v.len(), 10);
        assert_eq!(v.iter().filter(|v| v.result == Outcome::Fail).count(), 5);
        let first = run(&src.replace("mode: all", "mode: first"), &trace(10, 0.1));
        assert_eq!(first.len(), 1);
        let never = run(&src.replace("reference: true", "reference: false"), &trace(10, 0.1));
        assert_eq!(never[0].result, Outcome::NotApplicable);
    }

    #[test]
    fn windows_past_the_trace_end() {
        let src = "assertion a { odd: x type: postcondition temporal window: 2s reference: time() >= 0.5s condition: true }";
        let v = run(src, &trace(10, 0.1));
        assert_eq!(v[0].result, Outcome::Fail);
        assert_eq!(v[0].detail["reason"], "insufficient-data");
        let mut c = ctx();
        c.strict_windows = false;
        let v = evaluate(&compile(src).unwrap(), &trace(10, 0.1), &c);
        assert_eq!(v[0].result, Outcome::NotApplicable);
        let v = run(src, &trace(40, 0.1));
        assert_eq!(v[0].result, Outcome::Pass);
        assert_eq!(v[0].detail["window_steps"], 20);
    }

    #[test]
    fn precondition_windows() {
        let src = "assertion a { odd: x type: precondition temporal window: 1s reference: time() >= 2s condition: time() > 1.5s }";
        let v = run(src, &trace(40, 0.1));
        assert_eq!(v[0].result, Outcome::Fail);
        assert!((v[0].detail["failed_at"].as_f64().unwrap() - 1.0).abs() < 1e-9);
        let phys = "assertion a { odd: x type: precondition physical offset: 0.5s reference: time() >= 2s condition: time() > 1.45s }";
        let v = run(phys, &trace(40, 0.1));
        assert_eq!(v[0].result, Outcome::Pass);
        assert!((v[0].detail["evaluated_at"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn measured_and_threshold_recorded() {
        let v = run("assertion a { odd: x type: invariant condition: speed_of(\"av\") > 5 }", &trace(5, 0.1));
        assert!((v[2].measured().unwrap() - 10.0).abs() < 1e-9);
        assert_eq!(v[2].threshold(), Some(5.0));
    }

    #[test]
    fn missing_actor_fails_with_reason() {
        let v = run("assertion a { odd: x type: invariant condition: distance_ahead(\"av\", \"ov\") > 1 }", &trace(3, 0.1));
        assert!(v.iter().all(|v| v.result == Outcome::Fail));
        assert_eq!(v[0].detail["reason"], "not-found: ov");
        let v = run("assertion a { odd: x type: invariant condition: not present(\"ov\") or distance_ahead(\"av\", \"ov\") > 1 }", &trace(3, 0.1));
        assert!(v.iter().all(|v| v.result == Outcome::Pass));
    }
}
