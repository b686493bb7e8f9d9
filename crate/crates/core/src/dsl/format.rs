use super::ast::*;

/// Canonical text for a document. `parse(format(d))` equals `d` up to spans.
pub fn format(doc: &Document) -> String {
    let mut out = String::new();
    for (i, item) in doc.items.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match item {
            Item::Const(c) => {
                out.push_str(&format!("const {} = {}\n", c.name, expr(&c.value)));
            }
            Item::Assertion(a) => assertion(&mut out, a),
        }
    }
    out
}

fn assertion(out: &mut String, a: &AssertionDecl) {
    out.push_str(&format!("assertion {} {{\n", a.id));
    out.push_str(&format!("  odd: {}\n", a.odd.join(", ")));
    let (kind, flavor) = match a.kind {
        KindSpec::Invariant => ("invariant", None),
        KindSpec::Execution => ("execution", None),
        KindSpec::Pre(f) => ("precondition", Some(f)),
        KindSpec::Post(f) => ("postcondition", Some(f)),
    };
    match flavor {
        None => out.push_str(&format!("  type: {kind}\n")),
        Some(Flavor::Temporal) => out.push_str(&format!("  type: {kind} temporal\n")),
        Some(Flavor::Physical) => out.push_str(&format!("  type: {kind} physical\n")),
    }
    if let Some(w) = a.window {
        let key = if flavor == Some(Flavor::Physical) { "offset" } else { "window" };
        out.push_str(&format!("  {key}: {}\n", duration(&w)));
    }
    if let Some(s) = a.severity {
        let s = match s {
            Severity::Safety => "safety",
            Severity::Performance => "performance",
        };
        out.push_str(&format!("  severity: {s}\n"));
    }
    if let Some(r) = &a.reference {
        out.push_str(&format!("  reference: {}\n", expr(r)));
    }
    if let Some(m) = a.mode {
        let m = match m {
            ReferenceMode::First => "first",
            ReferenceMode::All => "all",
        };
        out.push_str(&format!("  mode: {m}\n"));
    }
    out.push_str(&format!("  condition: {}\n}}\n", expr(&a.condition)));
}

fn duration(d: &Duration) -> String {
    match d.unit {
        TimeUnit::S => format!("{}s", d.value),
        TimeUnit::Ms => format!("{}ms", d.value),
    }
}

pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_child(out: &mut String, e: &Expr, min_prec: u8) {
    if e.precedence() < min_prec {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Num(v, u) => {
            out.push_str(&format!("{v}"));
            if let Some(u) = u {
                out.push_str(u.suffix());
            }
        }
        ExprKind::Str(s) => {
            out.push('"');
            for ch in s.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
        ExprKind::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Not => "not ",
                UnOp::Neg => "-",
            });
            write_child(out, inner, UNARY_PRECEDENCE);
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            // Comparisons do not chain, so both sides bind tighter.
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_child(out, l, left_min);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_child(out, r, p + 1);
        }
    }
}
