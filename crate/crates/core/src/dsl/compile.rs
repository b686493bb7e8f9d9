//! Type and unit checking; lowers the AST to an evaluable plan.

use super::ast::*;
use super::parser::parse;
use super::Diagnostic;
use crate::engine::{AssertionDef, AssertionKind};
use crate::units::MPS_PER_MPH;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Physical dimension as exponents of length and time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dim {
    pub length: i8,
    pub time: i8,
}

impl Dim {
    pub const NONE: Dim = Dim { length: 0, time: 0 };
    pub const METRES: Dim = Dim { length: 1, time: 0 };
    pub const SECONDS: Dim = Dim { length: 0, time: 1 };
    pub const MPS: Dim = Dim { length: 1, time: -1 };
    pub const AREA: Dim = Dim { length: 2, time: 0 };
    pub const ACCEL: Dim = Dim { length: 1, time: -2 };
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Dim::NONE => f.write_str("dimensionless"),
            Dim::METRES => f.write_str("metres"),
            Dim::SECONDS => f.write_str("seconds"),
            Dim::MPS => f.write_str("metres/second"),
            Dim::AREA => f.write_str("square metres"),
            Dim::ACCEL => f.write_str("metres/second^2"),
            Dim { length, time } => write!(f, "m^{length} s^{time}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Num(Dim),
    /// Unitless literal; adopts the unit of whatever it meets.
    Lit,
    Poly,
    Str,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => f.write_str("bool"),
            Ty::Num(d) => write!(f, "number ({d})"),
            Ty::Lit => f.write_str("number"),
            Ty::Poly => f.write_str("polygon"),
            Ty::Str => f.write_str("string"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Builtin {
    BoxOf,
    DangerSpaceOf,
    Overlaps,
    MinDistance,
    OverlapArea,
    CrossesCentreline,
    CrossesCentrelinePoly,
    DistanceAhead,
    AheadOf,
    SpeedOf,
    AccelerationOf,
    DangerSpaceLength,
    Sda,
    SdaProfile,
    PullOutClearance,
    CutInClearance,
    WithinLane,
    Present,
    HeadingRelLane,
    PullOutAngle,
    CutInAngle,
    Ttc,
    Time,
    Abs,
    Min,
    Max,
}

impl Builtin {
    /// Steps of future data needed to evaluate at a timestep.
    pub fn lookahead(self) -> usize {
        match self {
            Builtin::SpeedOf | Builtin::DangerSpaceOf | Builtin::Sda | Builtin::SdaProfile => 1,
            Builtin::AccelerationOf => 2,
            _ => 0,
        }
    }
}

#[derive(Clone, Copy)]
enum P {
    Str,
    Poly,
    Num(Dim),
    /// Any number; all `Any` parameters of one call must agree.
    Any,
}

#[derive(Clone, Copy)]
enum R {
    Bool,
    Num(Dim),
    Poly,
    SameAsArgs,
}

struct Sig {
    name: &'static str,
    f: Builtin,
    params: &'static [P],
    ret: R,
}

const SIGS: &[Sig] = &[
    Sig { name: "box_of", f: Builtin::BoxOf, params: &[P::Str], ret: R::Poly },
    Sig { name: "danger_space_of", f: Builtin::DangerSpaceOf, params: &[P::Str], ret: R::Poly },
    Sig { name: "overlaps", f: Builtin::Overlaps, params: &[P::Poly, P::Poly], ret: R::Bool },
    Sig { name: "min_distance", f: Builtin::MinDistance, params: &[P::Poly, P::Poly], ret: R::Num(Dim::METRES) },
    Sig { name: "overlap_area", f: Builtin::OverlapArea, params: &[P::Poly, P::Poly], ret: R::Num(Dim::AREA) },
    Sig { name: "crosses_centreline", f: Builtin::CrossesCentreline, params: &[P::Str], ret: R::Bool },
    Sig { name: "crosses_centreline", f: Builtin::CrossesCentrelinePoly, params: &[P::Poly], ret: R::Bool },
    Sig { name: "distance_ahead", f: Builtin::DistanceAhead, params: &[P::Str, P::Str], ret: R::Num(Dim::METRES) },
    Sig { name: "ahead_of", f: Builtin::AheadOf, params: &[P::Str, P::Str], ret: R::Bool },
    Sig { name: "speed_of", f: Builtin::SpeedOf, params: &[P::Str], ret: R::Num(Dim::MPS) },
    Sig { name: "acceleration_of", f: Builtin::AccelerationOf, params: &[P::Str], ret: R::Num(Dim::ACCEL) },
    Sig {
        name: "danger_space_length",
        f: Builtin::DangerSpaceLength,
        params: &[P::Num(Dim::MPS)],
        ret: R::Num(Dim::METRES),
    },
    Sig { name: "sda", f: Builtin::Sda, params: &[], ret: R::Num(Dim::METRES) },
    Sig { name: "sda", f: Builtin::SdaProfile, params: &[P::Str], ret: R::Num(Dim::METRES) },
    Sig { name: "pull_out_clearance", f: Builtin::PullOutClearance, params: &[], ret: R::Num(Dim::METRES) },
    Sig { name: "cut_in_clearance", f: Builtin::CutInClearance, params: &[], ret: R::Num(Dim::METRES) },
    Sig { name: "within_lane", f: Builtin::WithinLane, params: &[P::Str, P::Str], ret: R::Bool },
    Sig { name: "present", f: Builtin::Present, params: &[P::Str], ret: R::Bool },
    Sig { name: "heading_rel_lane", f: Builtin::HeadingRelLane, params: &[P::Str], ret: R::Num(Dim::NONE) },
    Sig { name: "pull_out_angle", f: Builtin::PullOutAngle, params: &[P::Str], ret: R::Num(Dim::NONE) },
    Sig { name: "cut_in_angle", f: Builtin::CutInAngle, params: &[P::Str], ret: R::Num(Dim::NONE) },
    Sig {
        name: "ttc",
        f: Builtin::Ttc,
        params: &[P::Num(Dim::METRES), P::Num(Dim::MPS)],
        ret: R::Num(Dim::SECONDS),
    },
    Sig { name: "time", f: Builtin::Time, params: &[], ret: R::Num(Dim::SECONDS) },
    Sig { name: "abs", f: Builtin::Abs, params: &[P::Any], ret: R::SameAsArgs },
    Sig { name: "min", f: Builtin::Min, params: &[P::Any, P::Any], ret: R::SameAsArgs },
    Sig { name: "max", f: Builtin::Max, params: &[P::Any, P::Any], ret: R::SameAsArgs },
];

pub fn builtin_names() -> BTreeSet<&'static str> {
    SIGS.iter().map(|s| s.name).collect()
}

/// Typed, constant-inlined expression.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Node {
    Bool(bool),
    Num(f64),
    Str(String),
    Call(Builtin, Vec<Node>),
    Unary(UnOp, Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
}

impl Node {
    pub fn lookahead(&self) -> usize {
        match self {
            Node::Call(f, args) => args.iter().map(Node::lookahead).fold(f.lookahead(), usize::max),
            Node::Unary(_, e) => e.lookahead(),
            Node::Binary(_, l, r) => l.lookahead().max(r.lookahead()),
            _ => 0,
        }
    }
}

fn diag(span: Span, msg: String) -> Diagnostic {
    Diagnostic::new(span.line.max(1), span.col.max(1), msg)
}

fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for j in 0..b.len() {
            let cur = row[j + 1];
            row[j + 1] = (prev + usize::from(ca != b[j])).min(row[j] + 1).min(cur + 1);
            prev = cur;
        }
    }
    row[b.len()]
}

fn nearest<'a>(name: &str, candidates: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    candidates.map(|c| (edit_distance(name, c), c)).filter(|(d, _)| *d <= 3).min().map(|(_, c)| c)
}

struct Checker<'a> {
    consts: HashMap<&'a str, &'a ConstDecl>,
    resolved: HashMap<String, (Node, Ty)>,
    in_progress: Vec<String>,
}

/// Common unit of two numeric operands, if they agree.
fn unify(a: Ty, b: Ty) -> Option<Ty> {
    match (a, b) {
        (Ty::Lit, Ty::Lit) => Some(Ty::Lit),
        (Ty::Lit, t @ Ty::Num(_)) | (t @ Ty::Num(_), Ty::Lit) => Some(t),
        (Ty::Num(x), Ty::Num(y)) if x == y => Some(Ty::Num(x)),
        _ => None,
    }
}

fn is_num(t: Ty) -> bool {
    matches!(t, Ty::Num(_) | Ty::Lit)
}

fn dim_of(t: Ty) -> Dim {
    match t {
        Ty::Num(d) => d,
        _ => Dim::NONE,
    }
}

impl<'a> Checker<'a> {
    fn constant(&mut self, name: &str, span: Span) -> Result<(Node, Ty), Diagnostic> {
        if let Some(r) = self.resolved.get(name) {
            return Ok(r.clone());
        }
        let Some(decl) = self.consts.get(name).copied() else {
            let hint = nearest(name, self.consts.keys().copied())
                .map(|c| format!("; did you mean `{c}`?"))
                .unwrap_or_default();
            return Err(diag(span, format!("unknown constant `{name}`{hint}")));
        };
        if self.in_progress.iter().any(|n| n == name) {
            return Err(diag(decl.span, format!("constant `{name}` is defined in terms of itself")));
        }
        self.in_progress.push(name.to_string());
        let r = self.expr(&decl.value);
        self.in_progress.pop();
        let r = r?;
        self.resolved.insert(name.to_string(), r.clone());
        Ok(r)
    }

    fn expr(&mut self, e: &Expr) -> Result<(Node, Ty), Diagnostic> {
        match &e.kind {
            ExprKind::Bool(b) => Ok((Node::Bool(*b), Ty::Bool)),
            ExprKind::Str(s) => Ok((Node::Str(s.clone()), Ty::Str)),
            ExprKind::Num(v, unit) => Ok(match unit {
                None => (Node::Num(*v), Ty::Lit),
                Some(LitUnit::Metres) => (Node::Num(*v), Ty::Num(Dim::METRES)),
                Some(LitUnit::Seconds) => (Node::Num(*v), Ty::Num(Dim::SECONDS)),
                Some(LitUnit::Millis) => (Node::Num(*v / 1000.0), Ty::Num(Dim::SECONDS)),
                Some(LitUnit::Mps) => (Node::Num(*v), Ty::Num(Dim::MPS)),
                Some(LitUnit::Mph) => (Node::Num(*v * MPS_PER_MPH), Ty::Num(Dim::MPS)),
                Some(LitUnit::Rad) => (Node::Num(*v), Ty::Num(Dim::NONE)),
            }),
            ExprKind::Name(n) => self.constant(n, e.span),
            ExprKind::Unary(op, inner) => {
                let (n, t) = self.expr(inner)?;
                match op {
                    UnOp::Not if t == Ty::Bool => Ok((Node::Unary(*op, Box::new(n)), Ty::Bool)),
                    UnOp::Not => Err(diag(e.span, format!("`not` needs a bool, found {t}"))),
                    UnOp::Neg if is_num(t) => Ok((Node::Unary(*op, Box::new(n)), t)),
                    UnOp::Neg => Err(diag(e.span, format!("cannot negate {t}"))),
                }
            }
            ExprKind::Binary(op, l, r) => {
                let (ln, lt) = self.expr(l)?;
                let (rn, rt) = self.expr(r)?;
                let ty = self.binary_type(*op, lt, rt, e.span)?;
                Ok((Node::Binary(*op, Box::new(ln), Box::new(rn)), ty))
            }
            ExprKind::Call(name, args) => self.call(name, args, e.span),
        }
    }

    fn binary_type(&self, op: BinOp, lt: Ty, rt: Ty, span: Span) -> Result<Ty, Diagnostic> {
        let mismatch = || diag(span, format!("unit mismatch: `{}` between {lt} and {rt}", op.symbol()));
        match op {
            BinOp::And | BinOp::Or => {
                if lt == Ty::Bool && rt == Ty::Bool {
                    Ok(Ty::Bool)
                } else {
                    Err(diag(span, format!("`{}` needs bool operands, found {lt} and {rt}", op.symbol())))
                }
            }
            BinOp::Eq | BinOp::Ne if lt == rt && matches!(lt, Ty::Bool | Ty::Str) => Ok(Ty::Bool),
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => {
                unify(lt, rt).map(|_| Ty::Bool).ok_or_else(mismatch)
            }
            BinOp::Add | BinOp::Sub => unify(lt, rt).ok_or_else(mismatch),
            BinOp::Mul | BinOp::Div => {
                if !(is_num(lt) && is_num(rt)) {
                    return Err(mismatch());
                }
                if lt == Ty::Lit && rt == Ty::Lit {
                    return Ok(Ty::Lit);
                }
                let (a, b) = (dim_of(lt), dim_of(rt));
                let sign = if op == BinOp::Mul { 1 } else { -1 };
                Ok(Ty::Num(Dim { length: a.length + sign * b.length, time: a.time + sign * b.time }))
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], span: Span) -> Result<(Node, Ty), Diagnostic> {
        let candidates: Vec<&Sig> = SIGS.iter().filter(|s| s.name == name).collect();
        if candidates.is_empty() {
            let hint = nearest(name, builtin_names().into_iter())
                .map(|c| format!("; did you mean `{c}`?"))
                .unwrap_or_default();
            return Err(diag(span, format!("unknown function `{name}`{hint}")));
        }
        let mut typed = Vec::with_capacity(args.len());
        for a in args {
            typed.push(self.expr(a)?);
        }
        let mut last_err = None;
        for sig in &candidates {
            match check_sig(sig, &typed) {
                Ok(ty) => {
                    let nodes = typed.into_iter().map(|(n, _)| n).collect();
                    return Ok((Node::Call(sig.f, nodes), ty));
                }
                Err(m) => last_err = Some(m),
            }
        }
        let msg = last_err.unwrap_or_default();
        Err(diag(span, format!("`{name}`: {msg}")))
    }
}

fn check_sig(sig: &Sig, args: &[(Node, Ty)]) -> Result<Ty, String> {
    if sig.params.len() != args.len() {
        return Err(format!("expected {} argument(s), found {}", sig.params.len(), args.len()));
    }
    let mut any: Option<Ty> = None;
    for (i, (p, (_, t))) in sig.params.iter().zip(args).enumerate() {
        let ok = match p {
            P::Str => *t == Ty::Str,
            P::Poly => *t == Ty::Poly,
            P::Num(d) => unify(*t, Ty::Num(*d)).is_some(),
            P::Any => match any {
                None if is_num(*t) => {
                    any = Some(*t);
                    true
                }
                None => false,
                Some(prev) => match unify(prev, *t) {
                    Some(u) => {
                        any = Some(u);
                        true
                    }
                    None => false,
                },
            },
        };
        if !ok {
            let want = match p {
                P::Str => "string".to_string(),
                P::Poly => "polygon".to_string(),
                P::Num(d) => format!("number ({d})"),
                P::Any => "number".to_string(),
            };
            return Err(format!("argument {} should be {want}, found {t}", i + 1));
        }
    }
    Ok(match sig.ret {
        R::Bool => Ty::Bool,
        R::Num(d) => Ty::Num(d),
        R::Poly => Ty::Poly,
        R::SameAsArgs => any.unwrap_or(Ty::Lit),
    })
}

fn expect_bool(c: &mut Checker, e: &Expr, what: &str) -> Result<Node, Diagnostic> {
    let (n, t) = c.expr(e)?;
    if t != Ty::Bool {
        return Err(diag(e.span, format!("{what} must be bool, found {t}")));
    }
    Ok(n)
}

/// Type-check a parsed document and produce assertion definitions in source order.
pub fn compile_document(doc: &Document) -> Result<Vec<AssertionDef>, Diagnostic> {
    let mut consts = HashMap::new();
    for item in &doc.items {
        if let Item::Const(c) = item {
            if consts.insert(c.name.as_str(), c).is_some() {
                return Err(diag(c.span, format!("duplicate constant `{}`", c.name)));
            }
        }
    }
    let mut checker = Checker { consts, resolved: HashMap::new(), in_progress: Vec::new() };
    // Check every constant even if unused.
    for item in &doc.items {
        if let Item::Const(c) = item {
            checker.constant(&c.name, c.span)?;
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for item in &doc.items {
        let Item::Assertion(a) = item else { continue };
        if !seen.insert(a.id.clone()) {
            return Err(diag(a.span, format!("duplicate assertion id `{}`", a.id)));
        }
        let kind = match (a.kind, a.window) {
            (KindSpec::Invariant, None) => AssertionKind::Invariant,
            (KindSpec::Execution, None) => AssertionKind::ExecutionCondition,
            (KindSpec::Invariant | KindSpec::Execution, Some(_)) => {
                return Err(diag(a.span, format!("assertion `{}`: window/offset only applies to pre/postconditions", a.id)))
            }
            (KindSpec::Pre(_) | KindSpec::Post(_), None) => {
                return Err(diag(a.span, format!("assertion `{}` needs a window or offset", a.id)))
            }
            (KindSpec::Pre(f), Some(w)) | (KindSpec::Post(f), Some(w)) => {
                let s = w.seconds();
                match (a.kind, f) {
                    (KindSpec::Pre(_), Flavor::Temporal) => AssertionKind::PreconditionTemporal { window: s },
                    (KindSpec::Pre(_), Flavor::Physical) => AssertionKind::PreconditionPhysical { offset: s },
                    (_, Flavor::Temporal) => AssertionKind::PostconditionTemporal { window: s },
                    (_, Flavor::Physical) => AssertionKind::PostconditionPhysical { offset: s },
                }
            }
        };
        let reference = match (&kind, &a.reference) {
            (AssertionKind::Invariant, Some(r)) => {
                return Err(diag(r.span, format!("invariant `{}` takes no reference", a.id)))
            }
            (AssertionKind::Invariant, None) => None,
            (_, None) => return Err(diag(a.span, format!("assertion `{}` needs a reference", a.id))),
            (_, Some(r)) => Some(expect_bool(&mut checker, r, "reference")?),
        };
        let condition = expect_bool(&mut checker, &a.condition, "condition")?;
        let lookahead = condition.lookahead().max(reference.as_ref().map_or(0, Node::lookahead));
        out.push(AssertionDef {
            id: a.id.clone(),
            odd_tags: a.odd.iter().cloned().collect(),
            kind,
            reference,
            condition,
            severity: a.severity.unwrap_or(Severity::Safety),
            reference_mode: a.mode.unwrap_or(ReferenceMode::First),
            lookahead,
        });
    }
    Ok(out)
}

/// Parse and compile in one go.
pub fn compile(src: &str) -> Result<Vec<AssertionDef>, Diagnostic> {
    compile_document(&parse(src)?)
}

/// Named constants of a document, evaluated where they are plain numbers.
pub fn constant_values(doc: &Document) -> Result<BTreeMap<String, f64>, Diagnostic> {
    let consts = doc
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Const(c) => Some((c.name.as_str(), c)),
            _ => None,
        })
        .collect();
    let mut checker = Checker { consts, resolved: HashMap::new(), in_progress: Vec::new() };
    let mut out = BTreeMap::new();
    for item in &doc.items {
        if let Item::Const(c) = item {
            if let (Node::Num(v), _) = checker.constant(&c.name, c.span)? {
                out.insert(c.name.clone(), v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(cond: &str) -> Result<Vec<AssertionDef>, Diagnostic> {
        compile(&format!("assertion a {{ odd: x type: invariant condition: {cond} }}"))
    }

    #[test]
    fn units_must_agree() {
        let e = inv("speed_of(\"av\") > 2s").unwrap_err();
        assert!(e.message.contains("unit mismatch"), "{}", e.message);
        assert!(inv("speed_of(\"av\") > 2").is_ok());
        assert!(inv("speed_of(\"av\") > 20mph").is_ok());
        assert!(inv("distance_ahead(\"av\", \"ov\") / speed_of(\"ov\") > 2s").is_ok());
        assert!(inv("min_distance(box_of(\"av\"), box_of(\"vbp\")) + 1s > 0").is_err());
    }

    #[test]
    fn unknown_function_suggests() {
        let e = inv("overlap(box_of(\"av\"), box_of(\"ov\"))").unwrap_err();
        assert!(e.message.contains("did you mean `overlaps`"), "{}", e.message);
    }

    #[test]
    fn constants_inline_and_cycles_fail() {
        let defs = compile("const g = 2m\nconst h = g * 2\nassertion a { odd: x type: invariant condition: min_distance(box_of(\"av\"), box_of(\"ov\")) > h }").unwrap();
        let Node::Binary(_, _, rhs) = &defs[0].condition else { panic!() };
        assert_eq!(**rhs, Node::Binary(BinOp::Mul, Box::new(Node::Num(2.0)), Box::new(Node::Num(2.0))));
        let e = compile("const a = b\nconst b = a\n").unwrap_err();
        assert!(e.message.contains("itself"));
    }

    #[test]
    fn kind_rules() {
        assert!(compile("assertion a { odd: x type: execution condition: true }").is_err());
        assert!(compile("assertion a { odd: x type: postcondition temporal reference: true condition: true }").is_err());
        assert!(compile("assertion a { odd: x type: invariant reference: true condition: true }").is_err());
        let d = compile("assertion a { odd: x type: postcondition physical offset: 250ms reference: true condition: true }").unwrap();
        assert_eq!(d[0].kind, AssertionKind::PostconditionPhysical { offset: 0.25 });
        assert!(compile("assertion a { odd: x type: invariant condition: 1 }").is_err());
        assert!(compile("assertion a { odd: x type: invariant condition: true }\nassertion a { odd: x type: invariant condition: true }").is_err());
    }

    #[test]
    fn lookahead_tracks_derivatives() {
        assert_eq!(inv("present(\"av\")").unwrap()[0].lookahead, 0);
        assert_eq!(inv("speed_of(\"av\") > 1").unwrap()[0].lookahead, 1);
        assert_eq!(inv("acceleration_of(\"av\") > 1").unwrap()[0].lookahead, 2);
    }

    #[test]
    fn deterministic_plans() {
        let src = "assertion a { odd: x type: invariant condition: sda() < distance_ahead(\"av\", \"ov\") }";
        let a = serde_json::to_string(&compile(src).unwrap()).unwrap();
        let b = serde_json::to_string(&compile(src).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
