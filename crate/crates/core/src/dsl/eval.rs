//! Evaluates compiled plans at one timestep.

use super::ast::{BinOp, UnOp};
use super::compile::{Builtin, Node};
use crate::geometry::{self, ConvexPolygon, Point};
use crate::models::{self, DrivingProfile, ProfileSet};
use crate::trace::{self, ActorState, StepSource};
use crate::units::{Metres, MetresPerSecond};
use crate::worldmap::{LaneSelector, RoadMap};
use std::collections::BTreeMap;
use std::rc::Rc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("not-found: {0}")]
    NotFound(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("model: {0}")]
    Model(String),
}

/// Which speed feeds danger-space construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DsSpeedPolicy {
    /// Finite-difference speed from positions.
    #[default]
    Derived,
    /// Recorded speed when present (estimator output), positions otherwise.
    Recorded,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub profile: DrivingProfile,
    pub profiles: ProfileSet,
    pub ds_speed: DsSpeedPolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let profiles = ProfileSet::default();
        let profile = profiles.get("nominal").expect("bundled nominal profile").clone();
        EvalConfig { profile, profiles, ds_speed: DsSpeedPolicy::Derived }
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Num(f64),
    Poly(Rc<ConvexPolygon>),
    Str(String),
}

/// Measurements gathered while evaluating, used for verdict detail.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    /// (measured, threshold) pairs in completion order.
    pub observations: Vec<(f64, f64)>,
    pub extras: BTreeMap<&'static str, f64>,
    pub low_confidence: bool,
}

pub struct Env<'a> {
    pub src: &'a dyn StepSource,
    pub index: usize,
    pub map: &'a RoadMap,
    pub config: &'a EvalConfig,
}

impl<'a> Env<'a> {
    fn actor(&self, name: &str, scratch: &mut Scratch) -> Result<&'a ActorState, EvalError> {
        let step = self.src.step(self.index).ok_or_else(|| EvalError::NotFound("timestep".into()))?;
        let a = step.resolve(name).ok_or_else(|| EvalError::NotFound(name.to_string()))?;
        scratch.low_confidence |= a.low_confidence;
        Ok(a)
    }

    fn velocity(&self, a: &ActorState) -> Result<Point, EvalError> {
        trace::velocity_vec(self.src, self.index, &a.actor_id)
            .ok_or_else(|| EvalError::Undefined(format!("velocity of {}", a.actor_id)))
    }

    fn ds_speed(&self, a: &ActorState) -> Result<f64, EvalError> {
        match (self.config.ds_speed, a.recorded_speed) {
            (DsSpeedPolicy::Recorded, Some(v)) => Ok(v.abs()),
            _ => Ok(self.velocity(a)?.norm()),
        }
    }

    /// Speed along the AV's travel axis, as the safe-distance model expects.
    fn longitudinal(&self, a: &ActorState, axis: Point) -> Result<f64, EvalError> {
        Ok(self.velocity(a)?.dot(axis))
    }

    fn sda(&self, profile: &DrivingProfile, scratch: &mut Scratch) -> Result<f64, EvalError> {
        let av = self.actor("av", scratch)?;
        let ov = self.actor("ov", scratch)?;
        let axis = Point::from_angle(trace::travel_axis(self.map, av));
        let v_av = self.longitudinal(av, axis)?;
        let v_ov = self.longitudinal(ov, axis)?.abs();
        let step = self.src.step(self.index).expect("checked by actor lookup");
        let (v_vbp, vbp_len) = match step.resolve("vbp") {
            Some(vbp) => (self.longitudinal(vbp, axis)?.max(0.0), vbp.length),
            None => (0.0, self.config.profiles.geometry.vbp_length_m),
        };
        let mut g = self.config.profiles.geometry_for(MetresPerSecond(v_av), MetresPerSecond(v_vbp), MetresPerSecond(v_ov));
        g.vbp_length = Metres(vbp_len);
        let s = models::safe_distance_ahead(profile, &g).map_err(|e| EvalError::Model(e.to_string()))?;
        scratch.extras.insert("manoeuvre_time_s", s.manoeuvre.total().0);
        scratch.extras.insert("closing_speed_mps", v_av + v_ov);
        scratch.extras.insert("danger_space_ov_m", s.danger_space_ov.0);
        Ok(s.total().0)
    }
}

fn num(v: Value) -> f64 {
    match v {
        Value::Num(x) => x,
        other => unreachable!("type checker guarantees a number, got {other:?}"),
    }
}

fn boolean(v: Value) -> bool {
    match v {
        Value::Bool(b) => b,
        other => unreachable!("type checker guarantees a bool, got {other:?}"),
    }
}

fn poly(v: Value) -> Rc<ConvexPolygon> {
    match v {
        Value::Poly(p) => p,
        other => unreachable!("type checker guarantees a polygon, got {other:?}"),
    }
}

fn string(v: Value) -> String {
    match v {
        Value::Str(s) => s,
        other => unreachable!("type checker guarantees a string, got {other:?}"),
    }
}

pub fn eval(node: &Node, env: &Env, scratch: &mut Scratch) -> Result<Value, EvalError> {
    Ok(match node {
        Node::Bool(b) => Value::Bool(*b),
        Node::Num(x) => Value::Num(*x),
        Node::Str(s) => Value::Str(s.clone()),
        Node::Unary(UnOp::Not, e) => Value::Bool(!boolean(eval(e, env, scratch)?)),
        Node::Unary(UnOp::Neg, e) => Value::Num(-num(eval(e, env, scratch)?)),
        Node::Binary(BinOp::And, l, r) => {
            Value::Bool(boolean(eval(l, env, scratch)?) && boolean(eval(r, env, scratch)?))
        }
        Node::Binary(BinOp::Or, l, r) => {
            Value::Bool(boolean(eval(l, env, scratch)?) || boolean(eval(r, env, scratch)?))
        }
        Node::Binary(op, l, r) => {
            let (a, b) = (eval(l, env, scratch)?, eval(r, env, scratch)?);
            match (a, b) {
                (Value::Num(x), Value::Num(y)) => match op {
                    BinOp::Add => Value::Num(x + y),
                    BinOp::Sub => Value::Num(x - y),
                    BinOp::Mul => Value::Num(x * y),
                    BinOp::Div => Value::Num(x / y),
                    cmp => {
                        scratch.observations.push((x, y));
                        Value::Bool(match cmp {
                            BinOp::Lt => x < y,
                            BinOp::Le => x <= y,
                            BinOp::Gt => x > y,
                            BinOp::Ge => x >= y,
                            BinOp::Eq => x == y,
                            _ => x != y,
                        })
                    }
                },
                (Value::Bool(x), Value::Bool(y)) => Value::Bool((x == y) == (*op == BinOp::Eq)),
                (Value::Str(x), Value::Str(y)) => Value::Bool((x == y) == (*op == BinOp::Eq)),
                _ => unreachable!("type checker rejects mixed operands"),
            }
        }
        Node::Call(f, args) => call(*f, args, env, scratch)?,
    })
}

fn arg_actor<'a>(args: &[Node], i: usize, env: &Env<'a>, scratch: &mut Scratch) -> Result<&'a ActorState, EvalError> {
    let name = string(eval(&args[i], env, scratch)?);
    env.actor(&name, scratch)
}

fn call(f: Builtin, args: &[Node], env: &Env, scratch: &mut Scratch) -> Result<Value, EvalError> {
    let arg = |i: usize, scratch: &mut Scratch| eval(&args[i], env, scratch);
    let actor = |i: usize, scratch: &mut Scratch| arg_actor(args, i, env, scratch);
    Ok(match f {
        Builtin::BoxOf => Value::Poly(Rc::new(actor(0, scratch)?.bbox())),
        Builtin::DangerSpaceOf => {
            let a = actor(0, scratch)?;
            let v = env.ds_speed(a)?;
            let len = models::danger_space_length(MetresPerSecond(v)).map_err(|e| EvalError::Model(e.to_string()))?;
            let ds = geometry::danger_space(&a.pose, a.length, a.width, len.0)
                .map_err(|e| EvalError::Model(e.to_string()))?;
            Value::Poly(Rc::new(ds))
        }
        Builtin::Overlaps => {
            let (p, q) = (poly(arg(0, scratch)?), poly(arg(1, scratch)?));
            let d = geometry::min_distance(&p, &q);
            if d.is_finite() {
                scratch.observations.push((d, 0.0));
            }
            Value::Bool(geometry::overlaps(&p, &q))
        }
        Builtin::MinDistance => {
            let (p, q) = (poly(arg(0, scratch)?), poly(arg(1, scratch)?));
            Value::Num(geometry::min_distance(&p, &q))
        }
        Builtin::OverlapArea => {
            let (p, q) = (poly(arg(0, scratch)?), poly(arg(1, scratch)?));
            Value::Num(geometry::overlap_area(&p, &q))
        }
        Builtin::CrossesCentreline => Value::Bool(env.map.crosses_centreline(&actor(0, scratch)?.bbox())),
        Builtin::CrossesCentrelinePoly => Value::Bool(env.map.crosses_centreline(&poly(arg(0, scratch)?))),
        Builtin::DistanceAhead => {
            let (a, b) = (actor(0, scratch)?, actor(1, scratch)?);
            Value::Num(trace::distance_ahead(env.map, a, b))
        }
        Builtin::AheadOf => {
            let (a, b) = (actor(0, scratch)?, actor(1, scratch)?);
            Value::Bool(trace::ahead_of(env.map, a, b))
        }
        Builtin::SpeedOf => {
            let a = actor(0, scratch)?;
            Value::Num(env.velocity(a)?.norm())
        }
        Builtin::AccelerationOf => {
            let a = actor(0, scratch)?;
            let acc = trace::acceleration_vec(env.src, env.index, &a.actor_id)
                .ok_or_else(|| EvalError::Undefined(format!("acceleration of {}", a.actor_id)))?;
            Value::Num(acc.dot(a.pose.forward()))
        }
        Builtin::DangerSpaceLength => {
            let v = num(arg(0, scratch)?);
            let len = models::danger_space_length(MetresPerSecond(v)).map_err(|e| EvalError::Model(e.to_string()))?;
            Value::Num(len.0)
        }
        Builtin::Sda => Value::Num(env.sda(&env.config.profile, scratch)?),
        Builtin::SdaProfile => {
            let name = string(arg(0, scratch)?);
            let p = env.config.profiles.get(&name).map_err(|e| EvalError::Model(e.to_string()))?.clone();
            Value::Num(env.sda(&p, scratch)?)
        }
        Builtin::PullOutClearance => Value::Num(env.config.profile.pull_out_clearance),
        Builtin::CutInClearance => Value::Num(env.config.profile.cut_in_clearance),
        Builtin::WithinLane => {
            let a = actor(0, scratch)?;
            let sel = match string(arg(1, scratch)?).as_str() {
                "running" => LaneSelector::Running(a.pose.heading),
                "oncoming" => LaneSelector::Oncoming(a.pose.heading),
                id => {
                    if env.map.lanelet(id).is_none() {
                        return Err(EvalError::NotFound(format!("lanelet {id}")));
                    }
                    LaneSelector::Id(id.to_string())
                }
            };
            Value::Bool(env.map.within(&a.bbox(), &sel))
        }
        Builtin::Present => {
            let name = string(arg(0, scratch)?);
            let step = env.src.step(env.index).ok_or_else(|| EvalError::NotFound("timestep".into()))?;
            Value::Bool(step.resolve(&name).is_some())
        }
        Builtin::HeadingRelLane => {
            let a = actor(0, scratch)?;
            let rel = env
                .map
                .lane_orientation(a.pose.position())
                .map_or(a.pose.heading, |o| a.pose.heading - o);
            Value::Num(geometry::normalize_angle(rel))
        }
        Builtin::PullOutAngle => Value::Num(trace::pull_out_angle(env.map, actor(0, scratch)?)),
        Builtin::CutInAngle => Value::Num(-trace::pull_out_angle(env.map, actor(0, scratch)?)),
        Builtin::Ttc => {
            let (gap, closing) = (num(arg(0, scratch)?), num(arg(1, scratch)?));
            // No closing speed means no collision course.
            Value::Num(if closing > 0.0 { gap / closing } else { f64::INFINITY })
        }
        Builtin::Time => Value::Num(env.src.step(env.index).map_or(f64::NAN, |s| s.t)),
        Builtin::Abs => Value::Num(num(arg(0, scratch)?).abs()),
        Builtin::Min => Value::Num(num(arg(0, scratch)?).min(num(arg(1, scratch)?))),
        Builtin::Max => Value::Num(num(arg(0, scratch)?).max(num(arg(1, scratch)?))),
    })
}

/// Evaluate a boolean plan.
pub fn eval_bool(node: &Node, env: &Env, scratch: &mut Scratch) -> Result<bool, EvalError> {
    eval(node, env, scratch).map(boolean)
}
