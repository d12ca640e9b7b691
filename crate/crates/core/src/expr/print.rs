use std::fmt::{self, Write};

use super::ast::{BinOp, Condition, Expr};

// Binding levels: sums < products < unary minus < powers < atoms.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const NEG: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => SUM,
        Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => PRODUCT,
        Expr::Binary(BinOp::Pow, _, _) => POWER,
        Expr::Neg(_) => NEG,
        Expr::Const(c) if c.is_sign_negative() => NEG,
        _ => ATOM,
    }
}

fn write_const(out: &mut String, c: f64) {
    // Debug formatting is the shortest representation that round-trips.
    let _ = write!(out, "{c:?}");
}

fn write_at(out: &mut String, e: &Expr, min_level: u8) {
    let wrap = level(e) < min_level;
    if wrap {
        out.push('(');
    }
    write_expr(out, e);
    if wrap {
        out.push(')');
    }
}

fn write_condition(out: &mut String, c: &Condition) {
    write_at(out, &c.lhs, SUM);
    let _ = write!(out, " {} ", c.op.symbol());
    write_at(out, &c.rhs, SUM);
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Const(c) => write_const(out, *c),
        Expr::Var(v) => out.push_str(v.name()),
        Expr::Neg(a) => {
            out.push('-');
            write_at(out, a, NEG);
        }
        Expr::Unary(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_at(out, a, SUM);
            out.push(')');
        }
        Expr::Binary(op @ (BinOp::Min | BinOp::Max), a, b) => {
            out.push_str(if *op == BinOp::Min { "min(" } else { "max(" });
            write_at(out, a, SUM);
            out.push_str(", ");
            write_at(out, b, SUM);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            let (sym, left, right) = match op {
                BinOp::Add => (" + ", SUM, PRODUCT),
                BinOp::Sub => (" - ", SUM, PRODUCT),
                BinOp::Mul => ("*", PRODUCT, NEG),
                BinOp::Div => ("/", PRODUCT, NEG),
                BinOp::Pow => ("^", ATOM, NEG),
                BinOp::Min | BinOp::Max => unreachable!(),
            };
            write_at(out, a, left);
            out.push_str(sym);
            write_at(out, b, right);
        }
        Expr::Piecewise {
            branches,
            otherwise,
        } => {
            out.push_str("pw(");
            for (c, v) in branches {
                write_condition(out, c);
                out.push_str(", ");
                write_at(out, v, SUM);
                out.push_str(", ");
            }
            write_at(out, otherwise, SUM);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self);
        f.write_str(&s)
    }
}
