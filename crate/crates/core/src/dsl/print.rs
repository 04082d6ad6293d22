//! Pretty printer producing text the parser reads back to the same AST.

use std::fmt::Write;

use super::ast::{BoolOp, CollOp, Constraint, Expr, Literal};

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bool {
            op: BoolOp::Implies,
            ..
        } => 1,
        Expr::Bool { op: BoolOp::Or, .. } => 2,
        Expr::Bool {
            op: BoolOp::And, ..
        } => 3,
        Expr::Not(_) => 4,
        Expr::Cmp { .. } => 5,
        Expr::Lit(Literal::Int(n)) if *n < 0 => 5,
        _ => 6,
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn write_at(out: &mut String, e: &Expr, min: u8) {
    if prec(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Lit(Literal::Int(n)) => write!(out, "{n}").unwrap(),
        Expr::Lit(Literal::Str(s)) => out.push_str(&quote(s)),
        Expr::Lit(Literal::Bool(b)) => write!(out, "{b}").unwrap(),
        Expr::Var { name, .. } => out.push_str(name),
        Expr::Nav { src, name, .. } => {
            write_at(out, src, 6);
            write!(out, ".{name}").unwrap();
        }
        Expr::Not(inner) => {
            out.push_str("not ");
            write_at(out, inner, 4);
        }
        Expr::Bool { op, lhs, rhs } => {
            let (kw, p) = match op {
                BoolOp::Implies => ("implies", 1),
                BoolOp::Or => ("or", 2),
                BoolOp::And => ("and", 3),
            };
            write_at(out, lhs, p);
            write!(out, " {kw} ").unwrap();
            write_at(out, rhs, p + 1);
        }
        Expr::Cmp { op, lhs, rhs, .. } => {
            write_at(out, lhs, 6);
            write!(out, " {} ", op.symbol()).unwrap();
            write_at(out, rhs, 6);
        }
        Expr::Coll { src, op, .. } => {
            write_at(out, src, 6);
            write!(out, "->{}(", op.name()).unwrap();
            match op {
                CollOp::Size | CollOp::IsEmpty | CollOp::NotEmpty => {}
                CollOp::Includes(arg) => write_expr(out, arg),
                CollOp::Exists { var, body } | CollOp::ForAll { var, body } => {
                    write!(out, "{var} | ").unwrap();
                    write_expr(out, body);
                }
            }
            out.push(')');
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

pub fn constraint_to_string(c: &Constraint) -> String {
    format!(
        "context {} inv {}:\n  {}\n",
        c.context,
        c.name,
        expr_to_string(&c.expr)
    )
}

/// Renders a whole constraint file.
pub fn pretty_print(cs: &[Constraint]) -> String {
    cs.iter()
        .map(constraint_to_string)
        .collect::<Vec<_>>()
        .join("\n")
}
