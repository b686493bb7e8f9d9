use super::{
    eval_condition, eval_reference, nearest, point_verdict, reason_verdict, step_verdict, window_verdict,
    AssertionDef, AssertionKind, CondResult, EvaluationContext, Outcome, ReferenceMode, Verdict, TIME_EPS,
};
use crate::trace::{parse_record, Step, StepSource, TraceBuilder, TraceError};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("time went backwards: {t} after {prev}")]
    TimeRegression { t: f64, prev: f64 },
    #[error("stream already finished")]
    Finished,
}

/// Steps still needed by some cursor, addressed by absolute index.
#[derive(Debug, Default)]
struct Buffer {
    base: usize,
    steps: VecDeque<Step>,
}

impl Buffer {
    fn len(&self) -> usize {
        self.base + self.steps.len()
    }

    fn drop_before(&mut self, idx: usize) {
        while self.base < idx && !self.steps.is_empty() {
            self.steps.pop_front();
            self.base += 1;
        }
    }
}

impl StepSource for Buffer {
    fn step(&self, i: usize) -> Option<&Step> {
        i.checked_sub(self.base).and_then(|k| self.steps.get(k))
    }
}

struct Sample {
    idx: usize,
    t: f64,
    cond: CondResult,
}

struct PendingWindow {
    t_ref: f64,
    items: Vec<(f64, CondResult)>,
}

struct PendingPoint {
    ref_idx: usize,
    t_ref: f64,
    target: f64,
}

struct Monitor {
    def: AssertionDef,
    cursor: usize,
    excluded: bool,
    fired: bool,
    history: VecDeque<Sample>,
    windows: Vec<PendingWindow>,
    points: Vec<PendingPoint>,
    last: Option<Sample>,
}

impl Monitor {
    fn new(def: AssertionDef) -> Monitor {
        Monitor {
            def,
            cursor: 0,
            excluded: false,
            fired: false,
            history: VecDeque::new(),
            windows: Vec::new(),
            points: Vec::new(),
            last: None,
        }
    }

    /// How far back the precondition history must reach.
    fn lookback(&self) -> Option<f64> {
        match self.def.kind {
            AssertionKind::PreconditionTemporal { window } => Some(window),
            AssertionKind::PreconditionPhysical { offset } => Some(offset),
            _ => None,
        }
    }

    fn process(&mut self, buf: &Buffer, ctx: &EvaluationContext, first_t: f64, out: &mut Vec<Verdict>) {
        let i = self.cursor;
        self.cursor += 1;
        let t = buf.step(i).expect("cursor step buffered").t;
        let id = self.def.id.clone();
        let strict = ctx.strict_windows;
        if self.excluded {
            return;
        }
        if i == 0 && !self.def.applies_to(&ctx.active_odd) {
            self.excluded = true;
            out.push(reason_verdict(&id, t, Outcome::NotApplicable, "odd-excluded"));
            return;
        }
        let cond = match self.def.kind {
            AssertionKind::ExecutionCondition => None,
            _ => Some(eval_condition(&self.def, buf, i, ctx)),
        };

        if let Some(c) = &cond {
            let mut still = Vec::new();
            for mut w in self.windows.drain(..) {
                let end = w.t_ref + window_of(self.def.kind);
                if t <= end + TIME_EPS {
                    w.items.push((t, c.clone()));
                }
                if t >= end - TIME_EPS {
                    out.push(window_verdict(&id, w.t_ref, w.items.iter().map(|(t, c)| (*t, c)), true, strict));
                } else {
                    still.push(w);
                }
            }
            self.windows = still;
            let last = self.last.as_ref();
            self.points.retain(|p| {
                if t < p.target {
                    return true;
                }
                let prev = last.filter(|s| s.idx >= p.ref_idx);
                let use_prev = prev.is_some_and(|s| (s.t - p.target).abs() <= (t - p.target).abs());
                let at = if use_prev { prev.map(|s| (s.t, &s.cond)) } else { Some((t, c)) };
                out.push(point_verdict(&id, p.t_ref, at, strict));
                false
            });
            if let Some(back) = self.lookback() {
                self.history.push_back(Sample { idx: i, t, cond: c.clone() });
                while self.history.len() > 1 && self.history[1].t < t - back - TIME_EPS {
                    self.history.pop_front();
                }
            }
        }

        let can_fire = !(self.fired && self.def.reference_mode == ReferenceMode::First);
        if self.def.kind != AssertionKind::Invariant && can_fire && eval_reference(&self.def, buf, i, ctx) {
            self.fired = true;
            match self.def.kind {
                AssertionKind::Invariant => {}
                AssertionKind::ExecutionCondition => {
                    out.push(step_verdict(&id, t, &eval_condition(&self.def, buf, i, ctx)));
                }
                AssertionKind::PreconditionTemporal { window } => {
                    let lo = t - window - TIME_EPS;
                    let items = self.history.iter().filter(|s| s.idx < i && s.t >= lo).map(|s| (s.t, &s.cond));
                    let complete = first_t <= t - window + TIME_EPS;
                    out.push(window_verdict(&id, t, items, complete, strict));
                }
                AssertionKind::PreconditionPhysical { offset } => {
                    let target = t - offset;
                    let at = if target >= first_t - TIME_EPS {
                        nearest(self.history.iter().enumerate().map(|(k, s)| (k, s.t)), target)
                            .map(|k| (self.history[k].t, &self.history[k].cond))
                    } else {
                        None
                    };
                    out.push(point_verdict(&id, t, at, strict));
                }
                AssertionKind::PostconditionTemporal { .. } => {
                    self.windows.push(PendingWindow { t_ref: t, items: Vec::new() });
                }
                AssertionKind::PostconditionPhysical { offset } => {
                    let target = t + offset;
                    if t >= target {
                        out.push(point_verdict(&id, t, cond.as_ref().map(|c| (t, c)), strict));
                    } else {
                        self.points.push(PendingPoint { ref_idx: i, t_ref: t, target });
                    }
                }
            }
        }

        if let (AssertionKind::Invariant, Some(c)) = (self.def.kind, &cond) {
            out.push(step_verdict(&id, t, c));
        }
        if let Some(c) = cond {
            self.last = Some(Sample { idx: i, t, cond: c });
        }
    }

    fn finish(&mut self, ctx: &EvaluationContext, last_t: f64, out: &mut Vec<Verdict>) {
        if self.excluded {
            return;
        }
        let id = self.def.id.clone();
        let strict = ctx.strict_windows;
        for w in self.windows.drain(..) {
            out.push(window_verdict(&id, w.t_ref, w.items.iter().map(|(t, c)| (*t, c)), false, strict));
        }
        for p in self.points.drain(..) {
            let at = self
                .last
                .as_ref()
                .filter(|s| p.target <= last_t + TIME_EPS && s.idx >= p.ref_idx)
                .map(|s| (s.t, &s.cond));
            out.push(point_verdict(&id, p.t_ref, at, strict));
        }
        if self.def.kind != AssertionKind::Invariant && !self.fired {
            out.push(reason_verdict(&id, last_t, Outcome::NotApplicable, "no-reference"));
        }
    }
}

fn window_of(kind: AssertionKind) -> f64 {
    match kind {
        AssertionKind::PostconditionTemporal { window } | AssertionKind::PreconditionTemporal { window } => window,
        _ => 0.0,
    }
}

/// Incremental evaluator. Produces the same verdicts as [`super::evaluate`],
/// emitting each as soon as the steps it depends on have arrived.
pub struct StreamEngine {
    ctx: EvaluationContext,
    monitors: Vec<Monitor>,
    buf: Buffer,
    builder: TraceBuilder,
    first_t: Option<f64>,
    last_t: Option<f64>,
    finished: bool,
    line: usize,
}

impl StreamEngine {
    pub fn new(assertions: Vec<AssertionDef>, ctx: EvaluationContext) -> StreamEngine {
        StreamEngine {
            ctx,
            monitors: assertions.into_iter().map(Monitor::new).collect(),
            buf: Buffer::default(),
            builder: TraceBuilder::new(),
            first_t: None,
            last_t: None,
            finished: false,
            line: 0,
        }
    }

    pub fn context(&self) -> &EvaluationContext {
        &self.ctx
    }

    /// Number of steps currently held for derivatives and lookahead.
    pub fn buffered(&self) -> usize {
        self.buf.steps.len()
    }

    pub fn warnings(&self) -> &[String] {
        &self.builder.warnings
    }

    /// Feed one JSON line of a trace. Blank lines are ignored.
    pub fn push_line(&mut self, line: &str) -> Result<Vec<Verdict>, StreamError> {
        self.line += 1;
        if line.trim().is_empty() {
            return Ok(Vec::new());
        }
        let rec = parse_record(line, self.line)?;
        match self.builder.push(rec, self.line)? {
            Some(step) => self.push_step(step),
            None => Ok(Vec::new()),
        }
    }

    /// Feed one complete timestep.
    pub fn push_step(&mut self, step: Step) -> Result<Vec<Verdict>, StreamError> {
        if self.finished {
            return Err(StreamError::Finished);
        }
        if let Some(prev) = self.last_t {
            if step.t <= prev {
                return Err(StreamError::TimeRegression { t: step.t, prev });
            }
        }
        self.first_t.get_or_insert(step.t);
        self.last_t = Some(step.t);
        self.buf.steps.push_back(step);
        let mut out = Vec::new();
        self.drain(false, &mut out);
        Ok(out)
    }

    /// Flush everything still pending at end of input.
    pub fn finish(&mut self) -> Result<Vec<Verdict>, StreamError> {
        let mut out = Vec::new();
        if let Some(step) = self.builder.finish() {
            out.extend(self.push_step(step)?);
        }
        if self.finished {
            return Ok(out);
        }
        self.finished = true;
        self.drain(true, &mut out);
        if let Some(last_t) = self.last_t {
            for m in &mut self.monitors {
                m.finish(&self.ctx, last_t, &mut out);
            }
        }
        Ok(out)
    }

    fn drain(&mut self, at_end: bool, out: &mut Vec<Verdict>) {
        let received = self.buf.len();
        let first_t = self.first_t.unwrap_or(0.0);
        for m in &mut self.monitors {
            while m.cursor < received && (at_end || m.cursor + m.def.lookahead < received) {
                m.process(&self.buf, &self.ctx, first_t, out);
            }
        }
        let oldest_needed = self.monitors.iter().map(|m| m.cursor).min().unwrap_or(received);
        self.buf.drop_before(oldest_needed.saturating_sub(2));
    }
}
