//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-w^2` is `-(w^2)`, and `^` is
//! right-associative through the `unary` exponent.

use super::{ComplexExpr, ExprError, C64};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only when followed by digits, so `2e` stays `2` then `e`
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s = &text[start..i];
            let v: f64 = s.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                msg: format!("malformed number `{s}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

/// Identifiers appearing in `text`, in order of first appearance.
pub fn identifiers(text: &str) -> Result<Vec<String>, ExprError> {
    let mut seen: Vec<String> = Vec::new();
    for (tok, _) in lex(text)? {
        if let Tok::Ident(name) = tok {
            if !seen.contains(&name) {
                seen.push(name);
            }
        }
    }
    Ok(seen)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

const FUNCTIONS: [&str; 7] = ["conj", "abs", "re", "im", "exp", "log", "sqrt"];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(ExprError::Syntax {
                pos: self.offset(),
                msg: format!("expected `{op}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<ComplexExpr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = lhs.add(&self.term()?);
            } else if self.eat('-') {
                lhs = lhs.sub(&self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ComplexExpr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = lhs.mul(&self.unary()?);
            } else if self.eat('/') {
                lhs = lhs.div(&self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ComplexExpr, ExprError> {
        if self.eat('-') {
            Ok(self.unary()?.neg())
        } else {
            self.factor()
        }
    }

    fn factor(&mut self) -> Result<ComplexExpr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(base.pow_expr(&exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ComplexExpr, ExprError> {
        let at = self.offset();
        let tok = self.toks.get(self.pos).map(|(t, _)| t.clone());
        match tok {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(ComplexExpr::real(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if FUNCTIONS.contains(&name.as_str()) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(match name.as_str() {
                        "conj" => arg.conj(),
                        "abs" => arg.abs(),
                        "re" => arg.re(),
                        "im" => arg.im(),
                        "exp" => arg.exp(),
                        "log" => arg.log(),
                        _ => arg.sqrt(),
                    });
                }
                match name.as_str() {
                    "w" => Ok(ComplexExpr::w()),
                    "wbar" => Ok(ComplexExpr::wbar()),
                    "x" => Ok(ComplexExpr::x()),
                    "y" => Ok(ComplexExpr::y()),
                    "r" => Ok(ComplexExpr::r()),
                    "i" => Ok(ComplexExpr::constant(C64::new(0.0, 1.0))),
                    "pi" => Ok(ComplexExpr::real(std::f64::consts::PI)),
                    "e" => Ok(ComplexExpr::real(std::f64::consts::E)),
                    _ => Err(ExprError::UnknownIdent { name, pos: at }),
                }
            }
            Some(Tok::Op(c)) => Err(ExprError::Syntax {
                pos: at,
                msg: format!("unexpected `{c}`"),
            }),
            None => Err(ExprError::Syntax {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

pub(super) fn parse(text: &str) -> Result<ComplexExpr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ExprError::Syntax {
            pos: p.offset(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-2^2").unwrap();
        assert_eq!(e.as_const().unwrap(), C64::new(-4.0, 0.0));
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.as_const().unwrap(), C64::new(512.0, 0.0));
        let e = parse("1 - 2 - 3").unwrap();
        assert_eq!(e.as_const().unwrap(), C64::new(-4.0, 0.0));
        let e = parse("w^-2").unwrap();
        assert!(matches!(e.node(), Node::PowInt(_, -2)));
    }

    #[test]
    fn identity_is_a_variable_node() {
        assert_eq!(parse("w").unwrap().node(), &Node::W);
        assert_eq!(parse("conj(w)").unwrap().node(), &Node::Wbar);
    }

    #[test]
    fn errors_carry_positions() {
        match parse("w + foo") {
            Err(ExprError::UnknownIdent { name, pos }) => {
                assert_eq!(name, "foo");
                assert_eq!(pos, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(w + 1"), Err(ExprError::Syntax { pos: 6, .. })));
        assert!(matches!(parse("w $ 2"), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("w w"), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse("exp w"), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("2.5e-3").unwrap().as_const().unwrap().re, 2.5e-3);
        assert!(parse("2e").is_err());
    }

    #[test]
    fn non_constant_exponent_becomes_exp_log() {
        let e = parse("w^w").unwrap();
        assert!(matches!(e.node(), Node::Exp(_)));
        let z = C64::new(0.7, 0.2);
        assert!((e.eval(z).unwrap() - (z * z.ln()).exp()).norm() < 1e-14);
    }

    #[test]
    fn identifier_scan() {
        assert_eq!(identifiers("1 + r^2*exp(r)").unwrap(), vec!["r", "exp"]);
    }
}
