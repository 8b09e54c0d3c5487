// SPDX-License-Identifier: Apache-2.0

//! Pretty printer producing text the parser accepts back.

use std::fmt::{self, Write};

use super::ast::{BinOp, BoolExpr, Expr, Program, Stmt};

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Const(c) if *c < 0 => 3,
        _ => 4,
    }
}

pub(crate) fn write_expr(f: &mut dyn Write, e: &Expr, min: u8) -> fmt::Result {
    let p = expr_prec(e);
    if p < min {
        f.write_char('(')?;
    }
    match e {
        Expr::Const(c) => write!(f, "{c}")?,
        Expr::Var(v) => f.write_str(v)?,
        Expr::Read(a, i) => {
            write!(f, "{a}[")?;
            write_expr(f, i, 0)?;
            f.write_char(']')?;
        }
        Expr::Neg(i) => {
            f.write_char('-')?;
            if let Expr::Const(c) = **i {
                write!(f, "({c})")?;
            } else {
                write_expr(f, i, 4)?;
            }
        }
        Expr::Bin(op, a, b) => {
            write_expr(f, a, p)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, b, p + 1)?;
        }
    }
    if p < min {
        f.write_char(')')?;
    }
    Ok(())
}

fn bool_prec(b: &BoolExpr) -> u8 {
    match b {
        BoolExpr::Implies(..) => 1,
        BoolExpr::Or(..) => 2,
        BoolExpr::And(..) => 3,
        BoolExpr::Not(_) => 4,
        _ => 5,
    }
}

pub(crate) fn write_bool(f: &mut dyn Write, b: &BoolExpr, min: u8) -> fmt::Result {
    let p = bool_prec(b);
    if p < min {
        f.write_char('(')?;
    }
    match b {
        BoolExpr::True => f.write_str("true")?,
        BoolExpr::False => f.write_str("false")?,
        BoolExpr::Rel(op, x, y) => {
            write_expr(f, x, 0)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, y, 0)?;
        }
        BoolExpr::Not(a) => {
            f.write_char('!')?;
            write_bool(f, a, 5)?;
        }
        BoolExpr::And(x, y) => {
            write_bool(f, x, 3)?;
            f.write_str(" && ")?;
            write_bool(f, y, 4)?;
        }
        BoolExpr::Or(x, y) => {
            write_bool(f, x, 2)?;
            f.write_str(" || ")?;
            write_bool(f, y, 3)?;
        }
        BoolExpr::Implies(x, y) => {
            write_bool(f, x, 2)?;
            f.write_str(" ==> ")?;
            write_bool(f, y, 1)?;
        }
    }
    if p < min {
        f.write_char(')')?;
    }
    Ok(())
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_block(out: &mut String, s: &Stmt, depth: usize) {
    out.push_str("{\n");
    match s {
        Stmt::Seq(items) => items.iter().for_each(|i| write_stmt(out, i, depth + 1)),
        Stmt::Skip => {}
        other => write_stmt(out, other, depth + 1),
    }
    indent(out, depth);
    out.push('}');
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Seq(items) => {
            items.iter().for_each(|i| write_stmt(out, i, depth));
            return;
        }
        _ => indent(out, depth),
    }
    match s {
        Stmt::Skip => out.push_str("skip;"),
        Stmt::Assign(v, e) => {
            let _ = write!(out, "{v} := {e};");
        }
        Stmt::Store(a, i, e) => {
            let _ = write!(out, "{a}[{i}] := {e};");
        }
        Stmt::Assume(b) => {
            let _ = write!(out, "assume({b});");
        }
        Stmt::If(c, t, e) => {
            let _ = write!(out, "if ({c}) ");
            write_block(out, t, depth);
            if **e != Stmt::Skip {
                out.push_str(" else ");
                write_block(out, e, depth);
            }
        }
        Stmt::For(l) => {
            let c = &l.counter;
            let _ = write!(out, "for ({c} := 0; {c} < {}; {c} := {c} + 1) ", l.trip);
            write_block(out, &l.body, depth);
        }
        Stmt::Seq(_) => unreachable!(),
    }
    out.push('\n');
}

/// Render a whole program in the restricted concrete syntax.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "program {};", p.name);
    let scalars: Vec<&String> = p.scalars.iter().filter(|s| !p.counters.contains(*s)).collect();
    if !scalars.is_empty() {
        let names: Vec<&str> = scalars.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(out, "int {};", names.join(", "));
    }
    if !p.counters.is_empty() {
        let names: Vec<&str> = p.counters.iter().map(|s| s.as_str()).collect();
        let _ = writeln!(out, "counter {};", names.join(", "));
    }
    for a in &p.arrays {
        let _ = writeln!(out, "int {}[{}];", a.name, a.size);
    }
    for q in &p.pre {
        let _ = writeln!(out, "requires {q};");
    }
    for q in &p.post {
        let _ = writeln!(out, "ensures {q};");
    }
    write_stmt(&mut out, &p.body, 0);
    out
}
