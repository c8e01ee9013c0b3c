//! Canonical unparser. Every binary node is parenthesized, so printed text
//! re-parses to the same tree regardless of precedence.

use std::fmt::Write;

use super::ast::{BinOp, Expr, ExprKind, Pred, PredKind, UnOp};

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

pub fn print_pred(p: &Pred) -> String {
    let mut out = String::new();
    write_pred(&mut out, p);
    out
}

fn write_vars(out: &mut String, vars: &[String]) {
    out.push('(');
    out.push_str(&vars.join(", "));
    out.push(')');
}

pub fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn write_expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Int(v) if *v < 0 => {
            let _ = write!(out, "(-{})", v.unsigned_abs());
        }
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Str(s) => out.push_str(&quote_str(s)),
        ExprKind::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Unary(UnOp::Neg, a) => {
            out.push_str("(-");
            write_expr(out, a);
            out.push(')');
        }
        ExprKind::Unary(UnOp::Inverse, a) => {
            write_expr(out, a);
            out.push('~');
        }
        ExprKind::Unary(op, a) => {
            out.push_str(op.keyword().expect("call-syntax operator"));
            out.push('(');
            write_expr(out, a);
            out.push(')');
        }
        ExprKind::Binary(BinOp::Apply, f, x) => {
            write_expr(out, f);
            out.push('(');
            write_expr(out, x);
            out.push(')');
        }
        ExprKind::Binary(BinOp::Image, r, s) => {
            write_expr(out, r);
            out.push('[');
            write_expr(out, s);
            out.push(']');
        }
        ExprKind::Binary(op, l, r) => {
            out.push('(');
            write_expr(out, l);
            out.push(' ');
            out.push_str(op.symbol().expect("infix operator"));
            out.push(' ');
            write_expr(out, r);
            out.push(')');
        }
        ExprKind::SetExt(items) => {
            out.push('{');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, it);
            }
            out.push('}');
        }
        ExprKind::Comprehension { vars, pred, .. } => {
            out.push('{');
            out.push_str(&vars.join(", "));
            out.push_str(" | ");
            write_pred(out, pred);
            out.push('}');
        }
        ExprKind::Lambda { vars, pred, body, .. } => {
            out.push('%');
            write_vars(out, vars);
            out.push_str(".(");
            write_pred(out, pred);
            out.push_str(" | ");
            write_expr(out, body);
            out.push(')');
        }
    }
}

fn write_pred(out: &mut String, p: &Pred) {
    let connective = |out: &mut String, l: &Pred, op: &str, r: &Pred| {
        out.push('(');
        write_pred(out, l);
        out.push(' ');
        out.push_str(op);
        out.push(' ');
        write_pred(out, r);
        out.push(')');
    };
    match &p.kind {
        PredKind::And(l, r) => connective(out, l, "&", r),
        PredKind::Or(l, r) => connective(out, l, "or", r),
        PredKind::Implies(l, r) => connective(out, l, "=>", r),
        PredKind::Iff(l, r) => connective(out, l, "<=>", r),
        PredKind::Not(q) => {
            out.push_str("not(");
            write_pred(out, q);
            out.push(')');
        }
        PredKind::ForAll { vars, body, .. } | PredKind::Exists { vars, body, .. } => {
            out.push(if matches!(p.kind, PredKind::ForAll { .. }) { '!' } else { '#' });
            write_vars(out, vars);
            out.push_str(".(");
            write_pred(out, body);
            out.push(')');
        }
        PredKind::Rel(op, l, r) => {
            write_expr(out, l);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, r);
        }
        PredKind::DefRef(n) => out.push_str(n),
    }
}
