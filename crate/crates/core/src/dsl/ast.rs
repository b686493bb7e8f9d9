use serde::{Deserialize, Serialize};

/// Source location. Ignored by [`Document::without_spans`] comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Const(ConstDecl),
    Assertion(AssertionDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstDecl {
    pub name: String,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Safety,
    Performance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    First,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    Temporal,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindSpec {
    Invariant,
    Execution,
    Pre(Flavor),
    Post(Flavor),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    S,
    Ms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duration {
    pub value: f64,
    pub unit: TimeUnit,
}

impl Duration {
    pub fn seconds(&self) -> f64 {
        match self.unit {
            TimeUnit::S => self.value,
            TimeUnit::Ms => self.value / 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionDecl {
    pub id: String,
    pub odd: Vec<String>,
    pub kind: KindSpec,
    pub window: Option<Duration>,
    pub severity: Option<Severity>,
    pub reference: Option<Expr>,
    pub mode: Option<ReferenceMode>,
    pub condition: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LitUnit {
    Metres,
    Seconds,
    Millis,
    Mps,
    Mph,
    Rad,
}

impl LitUnit {
    pub fn suffix(self) -> &'static str {
        match self {
            LitUnit::Metres => "m",
            LitUnit::Seconds => "s",
            LitUnit::Millis => "ms",
            LitUnit::Mps => "mps",
            LitUnit::Mph => "mph",
            LitUnit::Rad => "rad",
        }
    }

    pub fn from_suffix(s: &str) -> Option<LitUnit> {
        Some(match s {
            "m" => LitUnit::Metres,
            "s" => LitUnit::Seconds,
            "ms" => LitUnit::Millis,
            "mps" => LitUnit::Mps,
            "mph" => LitUnit::Mph,
            "rad" => LitUnit::Rad,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Or,
    And,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }
}

pub const UNARY_PRECEDENCE: u8 = 6;
pub const ATOM_PRECEDENCE: u8 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Bool(bool),
    Num(f64, Option<LitUnit>),
    Str(String),
    Name(String),
    Call(String, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default() }
    }

    pub fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary(op, ..) => op.precedence(),
            ExprKind::Unary(..) => UNARY_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    fn strip(&mut self) {
        self.span = Span::default();
        match &mut self.kind {
            ExprKind::Call(_, args) => args.iter_mut().for_each(Expr::strip),
            ExprKind::Unary(_, e) => e.strip(),
            ExprKind::Binary(_, l, r) => {
                l.strip();
                r.strip();
            }
            _ => {}
        }
    }
}

impl Document {
    /// Copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> Document {
        let mut d = self.clone();
        for item in &mut d.items {
            match item {
                Item::Const(c) => {
                    c.span = Span::default();
                    c.value.strip();
                }
                Item::Assertion(a) => {
                    a.span = Span::default();
                    a.condition.strip();
                    if let Some(r) = &mut a.reference {
                        r.strip();
                    }
                }
            }
        }
        d
    }
}
