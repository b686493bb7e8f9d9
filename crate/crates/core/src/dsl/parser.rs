use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::Diagnostic;

const MAX_DEPTH: usize = 200;

pub const KEYWORDS: &[&str] = &["assertion", "const", "and", "or", "not", "true", "false", "duration"];

pub fn parse(src: &str) -> Result<Document, Diagnostic> {
    let tokens = lex(src)?;
    Parser { tokens, pos: 0, depth: 0 }.document()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, Diagnostic> {
        let t = self.peek();
        let mut d = Diagnostic::new(t.span.line, t.span.col, format!("unexpected {}", t.tok.describe()));
        d.expected = expected.iter().map(|s| s.to_string()).collect();
        Err(d)
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == w)
    }

    fn expect(&mut self, t: Tok) -> Result<Token, Diagnostic> {
        if self.peek().tok == t {
            Ok(self.bump())
        } else {
            let sym = format!("`{}`", t.symbol());
            self.error(&[sym.as_str()])
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                let t = self.bump();
                Ok((s, t.span))
            }
            _ => self.error(&[what]),
        }
    }

    fn document(&mut self) -> Result<Document, Diagnostic> {
        let mut items = Vec::new();
        loop {
            if self.peek().tok == Tok::Eof {
                return Ok(Document { items });
            }
            if self.at_word("const") {
                items.push(Item::Const(self.const_decl()?));
            } else if self.at_word("assertion") {
                items.push(Item::Assertion(self.assertion()?));
            } else {
                return self.error(&["assertion", "const"]);
            }
        }
    }

    fn const_decl(&mut self) -> Result<ConstDecl, Diagnostic> {
        let kw = self.bump();
        let (name, _) = self.ident("constant name")?;
        self.expect(Tok::Assign)?;
        let value = self.expr()?;
        if self.peek().tok == Tok::Semi {
            self.bump();
        }
        Ok(ConstDecl { name, span: join(kw.span, value.span), value })
    }

    fn assertion(&mut self) -> Result<AssertionDecl, Diagnostic> {
        let kw = self.bump();
        let (id, _) = self.ident("assertion id")?;
        self.expect(Tok::LBrace)?;
        let mut odd = None;
        let mut kind = None;
        let mut window = None;
        let mut severity = None;
        let mut reference = None;
        let mut mode = None;
        let mut condition = None;
        const FIELDS: &[&str] =
            &["odd", "type", "window", "offset", "severity", "reference", "mode", "condition", "`}`"];
        loop {
            if self.peek().tok == Tok::RBrace {
                break;
            }
            let field_tok = self.peek().clone();
            let field = match &field_tok.tok {
                Tok::Ident(f) if FIELDS.contains(&f.as_str()) => f.clone(),
                _ => return self.error(FIELDS),
            };
            self.bump();
            self.expect(Tok::Colon)?;
            let dup = match field.as_str() {
                "odd" => odd.replace(self.tag_list()?).is_some(),
                "type" => kind.replace(self.kind()?).is_some(),
                "window" | "offset" => window.replace(self.duration()?).is_some(),
                "severity" => severity.replace(self.severity()?).is_some(),
                "reference" => reference.replace(self.expr()?).is_some(),
                "mode" => mode.replace(self.mode()?).is_some(),
                _ => condition.replace(self.expr()?).is_some(),
            };
            if dup {
                return Err(Diagnostic::new(
                    field_tok.span.line,
                    field_tok.span.col,
                    format!("duplicate field `{field}`"),
                ));
            }
        }
        let close = self.bump();
        let missing = |f: &str| {
            Diagnostic::new(close.span.line, close.span.col, format!("assertion `{id}` is missing field `{f}`"))
        };
        Ok(AssertionDecl {
            odd: odd.ok_or_else(|| missing("odd"))?,
            kind: kind.ok_or_else(|| missing("type"))?,
            condition: condition.ok_or_else(|| missing("condition"))?,
            window,
            severity,
            reference,
            mode,
            span: join(kw.span, close.span),
            id,
        })
    }

    fn tag_list(&mut self) -> Result<Vec<String>, Diagnostic> {
        let mut tags = vec![self.ident("ODD tag")?.0];
        while self.peek().tok == Tok::Comma {
            self.bump();
            tags.push(self.ident("ODD tag")?.0);
        }
        Ok(tags)
    }

    fn kind(&mut self) -> Result<KindSpec, Diagnostic> {
        const KINDS: &[&str] = &["invariant", "execution", "precondition", "postcondition"];
        let word = match &self.peek().tok {
            Tok::Ident(w) if KINDS.contains(&w.as_str()) => w.clone(),
            _ => return self.error(KINDS),
        };
        self.bump();
        let flavor = |p: &mut Parser| -> Result<Flavor, Diagnostic> {
            if p.at_word("temporal") {
                p.bump();
                Ok(Flavor::Temporal)
            } else if p.at_word("physical") {
                p.bump();
                Ok(Flavor::Physical)
            } else {
                p.error(&["temporal", "physical"])
            }
        };
        Ok(match word.as_str() {
            "invariant" => KindSpec::Invariant,
            "execution" => KindSpec::Execution,
            "precondition" => KindSpec::Pre(flavor(self)?),
            _ => KindSpec::Post(flavor(self)?),
        })
    }

    fn severity(&mut self) -> Result<Severity, Diagnostic> {
        if self.at_word("safety") {
            self.bump();
            Ok(Severity::Safety)
        } else if self.at_word("performance") {
            self.bump();
            Ok(Severity::Performance)
        } else {
            self.error(&["safety", "performance"])
        }
    }

    fn mode(&mut self) -> Result<ReferenceMode, Diagnostic> {
        if self.at_word("first") {
            self.bump();
            Ok(ReferenceMode::First)
        } else if self.at_word("all") {
            self.bump();
            Ok(ReferenceMode::All)
        } else {
            self.error(&["first", "all"])
        }
    }

    fn duration(&mut self) -> Result<Duration, Diagnostic> {
        if self.at_word("duration") {
            self.bump();
        }
        match self.peek().tok {
            Tok::Num(value, Some(LitUnit::Seconds)) => {
                self.bump();
                Ok(Duration { value, unit: TimeUnit::S })
            }
            Tok::Num(value, Some(LitUnit::Millis)) => {
                self.bump();
                Ok(Duration { value, unit: TimeUnit::Ms })
            }
            _ => self.error(&["duration such as `2s` or `500ms`"]),
        }
    }

    pub fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let t = self.peek();
            return Err(Diagnostic::new(t.span.line, t.span.col, "expression nested too deeply".into()));
        }
        let r = self.or_expr();
        self.depth -= 1;
        r
    }

    fn or_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.and_expr()?;
        while self.at_word("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.comparison()?;
        while self.at_word("and") {
            self.bump();
            let rhs = self.comparison()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<Expr, Diagnostic> {
        let lhs = self.additive()?;
        let op = match self.peek().tok {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        if matches!(self.peek().tok, Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::EqEq | Tok::Ne) {
            let t = self.peek();
            return Err(Diagnostic::new(
                t.span.line,
                t.span.col,
                "comparisons cannot be chained; use `and`".into(),
            ));
        }
        Ok(binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        let op = if self.at_word("not") {
            UnOp::Not
        } else if self.peek().tok == Tok::Minus {
            UnOp::Neg
        } else {
            return self.atom();
        };
        let t = self.bump();
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Diagnostic::new(t.span.line, t.span.col, "expression nested too deeply".into()));
        }
        let operand = self.unary();
        self.depth -= 1;
        let operand = operand?;
        Ok(Expr { span: join(t.span, operand.span), kind: ExprKind::Unary(op, Box::new(operand)) })
    }

    fn atom(&mut self) -> Result<Expr, Diagnostic> {
        const ATOMS: &[&str] = &["number", "string", "name", "function call", "`(`", "true", "false"];
        let t = self.peek().clone();
        let kind = match t.tok {
            Tok::Num(v, u) => {
                self.bump();
                ExprKind::Num(v, u)
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Str(s)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                return Ok(Expr { span: join(t.span, close.span), kind: inner.kind });
            }
            Tok::Ident(ref w) if w == "true" || w == "false" => {
                self.bump();
                ExprKind::Bool(w == "true")
            }
            Tok::Ident(ref w) if w == "duration" => {
                self.bump();
                let d = self.duration()?;
                let unit = match d.unit {
                    TimeUnit::S => LitUnit::Seconds,
                    TimeUnit::Ms => LitUnit::Millis,
                };
                ExprKind::Num(d.value, Some(unit))
            }
            Tok::Ident(ref w) if !KEYWORDS.contains(&w.as_str()) => {
                let name = w.clone();
                self.bump();
                if self.peek().tok != Tok::LParen {
                    ExprKind::Name(name)
                } else {
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek().tok != Tok::RParen {
                        args.push(self.expr()?);
                        while self.peek().tok == Tok::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    let close = self.expect(Tok::RParen)?;
                    return Ok(Expr { span: join(t.span, close.span), kind: ExprKind::Call(name, args) });
                }
            }
            _ => return self.error(ATOMS),
        };
        let end = self.tokens[self.pos.saturating_sub(1)].span;
        Ok(Expr { span: join(t.span, end), kind })
    }
}

fn join(a: Span, b: Span) -> Span {
    Span { start: a.start, end: b.end.max(a.end), line: a.line, col: a.col }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr { span: join(lhs.span, rhs.span), kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cond(src: &str) -> Expr {
        let doc = parse(&format!("assertion a {{ odd: x type: invariant condition: {src} }}")).unwrap();
        match &doc.items[0] {
            Item::Assertion(a) => a.condition.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn precedence() {
        let e = cond("a or b and c");
        assert!(matches!(e.kind, ExprKind::Binary(BinOp::Or, _, _)));
        let e = cond("1 + 2 * 3 < 4");
        let ExprKind::Binary(BinOp::Lt, l, _) = e.kind else { panic!() };
        assert!(matches!(l.kind, ExprKind::Binary(BinOp::Add, _, _)));
        let e = cond("not a and b");
        let ExprKind::Binary(BinOp::And, l, _) = e.kind else { panic!() };
        assert!(matches!(l.kind, ExprKind::Unary(UnOp::Not, _)));
    }

    #[test]
    fn full_assertion() {
        let src = r#"
            const gap = 5m
            assertion rule_x {
                odd: urban, rural
                type: postcondition temporal
                window: 2s
                severity: performance
                reference: crosses_centreline("av")
                mode: all
                condition: min_distance(box_of("av"), box_of("vbp")) > gap
            }"#;
        let doc = parse(src).unwrap();
        assert_eq!(doc.items.len(), 2);
        let Item::Assertion(a) = &doc.items[1] else { panic!() };
        assert_eq!(a.kind, KindSpec::Post(Flavor::Temporal));
        assert_eq!(a.window.unwrap().seconds(), 2.0);
        assert_eq!(a.mode, Some(ReferenceMode::All));
        assert_eq!(a.odd, vec!["urban", "rural"]);
    }

    #[test]
    fn diagnostics_are_located() {
        let e = parse("assertion a {\n  odd: x\n  type: sometimes\n}").unwrap_err();
        assert_eq!((e.line, e.column), (3, 9));
        assert!(e.expected.contains(&"invariant".to_string()));
        let e = parse("assertion a { odd: x type: invariant }").unwrap_err();
        assert!(e.message.contains("condition"));
        let e = parse("assertion a { odd: x type: invariant condition: 1 < 2 < 3 }").unwrap_err();
        assert!(e.message.contains("chained"));
        let deep = format!("assertion a {{ odd: x type: invariant condition: {}1{} }}", "(".repeat(5000), ")".repeat(5000));
        assert!(parse(&deep).is_err());
        let deep = format!("assertion a {{ odd: x type: invariant condition: {}x }}", "not ".repeat(5000));
        assert!(parse(&deep).is_err());
    }
}
