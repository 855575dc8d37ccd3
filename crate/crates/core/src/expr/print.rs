use std::fmt;

use super::{ComplexExpr, Node, C64};

// Binding strength used to decide where parentheses are needed.
const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &ComplexExpr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => ADD,
        Node::Mul(..) | Node::Div(..) => MUL,
        Node::Neg(_) => NEG,
        Node::PowInt(..) | Node::Pow(..) => POW,
        _ => ATOM,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &ComplexExpr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Constants print so that parsing the text folds back to the same value.
fn write_const(f: &mut fmt::Formatter<'_>, c: C64) -> fmt::Result {
    if c.im == 0.0 {
        if c.re < 0.0 || (c.re == 0.0 && c.re.is_sign_negative()) {
            write!(f, "({})", c.re)
        } else {
            write!(f, "{}", c.re)
        }
    } else if c.re == 0.0 {
        write!(f, "({}*i)", c.im)
    } else if c.im < 0.0 {
        write!(f, "({} - {}*i)", c.re, -c.im)
    } else {
        write!(f, "({} + {}*i)", c.re, c.im)
    }
}

fn write_exponent(f: &mut fmt::Formatter<'_>, p: C64) -> fmt::Result {
    write_const(f, p)
}

impl fmt::Display for ComplexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_const(f, *c),
            Node::W => f.write_str("w"),
            Node::Wbar => f.write_str("conj(w)"),
            Node::Neg(u) => {
                f.write_str("-")?;
                write_child(f, u, POW)
            }
            Node::Conj(u) => write!(f, "conj({u})"),
            Node::Re(u) => write!(f, "re({u})"),
            Node::Im(u) => write!(f, "im({u})"),
            Node::Abs(u) => write!(f, "abs({u})"),
            Node::Exp(u) => write!(f, "exp({u})"),
            Node::Log(u) => write!(f, "log({u})"),
            Node::Sqrt(u) => write!(f, "sqrt({u})"),
            Node::PowInt(u, n) => {
                write_child(f, u, ATOM)?;
                f.write_str("^")?;
                write_exponent(f, C64::new(*n as f64, 0.0))
            }
            Node::Pow(u, p) => {
                write_child(f, u, ATOM)?;
                f.write_str("^")?;
                write_exponent(f, *p)
            }
            Node::Add(a, b) => {
                write_child(f, a, ADD)?;
                f.write_str(" + ")?;
                write_child(f, b, ADD + 1)
            }
            Node::Sub(a, b) => {
                write_child(f, a, ADD)?;
                f.write_str(" - ")?;
                write_child(f, b, ADD + 1)
            }
            Node::Mul(a, b) => {
                write_child(f, a, MUL)?;
                f.write_str("*")?;
                write_child(f, b, MUL + 1)
            }
            Node::Div(a, b) => {
                write_child(f, a, MUL)?;
                f.write_str("/")?;
                write_child(f, b, MUL + 1)
            }
        }
    }
}
