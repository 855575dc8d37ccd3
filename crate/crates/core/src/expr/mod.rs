//! Closed-form complex expressions in `w = x + iy`.
//!
//! Expressions are immutable trees over the two primitive variables `w` and
//! `conj(w)`. The surface names `x`, `y` and `r` are rewritten at parse time
//! into `(w + conj(w))/2`, `(w - conj(w))*(-i/2)` and `(w*conj(w))^0.5`, so the
//! Wirtinger operators in [`ComplexExpr::wirtinger`] only ever see `w` and
//! `conj(w)` as leaves.
//!
//! All constructors go through a small set of local rewrites (constant
//! folding, neutral elements, power merging). The rewrites are idempotent,
//! which is what makes `print(parse(print(e))) == print(e)` hold.

mod diff;
mod parse;
mod print;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use diff::Wirtinger;
pub use parse::identifiers;

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdent { name: String, pos: usize },
    #[error("domain error in `{node}` at w = {at}: {reason}")]
    Domain {
        node: String,
        at: C64,
        reason: &'static str,
    },
}

/// One node of the expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(C64),
    W,
    Wbar,
    Neg(ComplexExpr),
    Conj(ComplexExpr),
    Re(ComplexExpr),
    Im(ComplexExpr),
    Abs(ComplexExpr),
    Exp(ComplexExpr),
    Log(ComplexExpr),
    Sqrt(ComplexExpr),
    PowInt(ComplexExpr, i32),
    /// `u^p = exp(p log u)` with the principal logarithm, `p` not an integer.
    Pow(ComplexExpr, C64),
    Add(ComplexExpr, ComplexExpr),
    Sub(ComplexExpr, ComplexExpr),
    Mul(ComplexExpr, ComplexExpr),
    Div(ComplexExpr, ComplexExpr),
}

/// Shared, immutable expression handle. Cloning is cheap.
#[derive(Clone, PartialEq)]
pub struct ComplexExpr(Arc<Node>);

impl fmt::Debug for ComplexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexExpr({self})")
    }
}

fn is_zero(c: C64) -> bool {
    c.re == 0.0 && c.im == 0.0
}

fn is_one(c: C64) -> bool {
    c.re == 1.0 && c.im == 0.0
}

fn as_int(c: C64) -> Option<i32> {
    if c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= 1024.0 {
        Some(c.re as i32)
    } else {
        None
    }
}

impl ComplexExpr {
    fn new(node: Node) -> Self {
        ComplexExpr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        parse::parse(text)
    }

    pub fn constant(c: impl Into<C64>) -> Self {
        Self::new(Node::Const(c.into()))
    }

    pub fn real(v: f64) -> Self {
        Self::constant(C64::new(v, 0.0))
    }

    pub fn w() -> Self {
        Self::new(Node::W)
    }

    pub fn wbar() -> Self {
        Self::new(Node::Wbar)
    }

    /// `(w + conj(w)) / 2`
    pub fn x() -> Self {
        Self::w().add(&Self::wbar()).div(&Self::real(2.0))
    }

    /// `(w - conj(w)) * (-i/2)`; multiplying instead of dividing keeps the
    /// imaginary part of the result exactly zero.
    pub fn y() -> Self {
        Self::w()
            .sub(&Self::wbar())
            .mul(&Self::constant(C64::new(0.0, -0.5)))
    }

    /// `(w * conj(w))^0.5`
    pub fn r() -> Self {
        Self::w().mul(&Self::wbar()).pow(C64::new(0.5, 0.0))
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        self.as_const().is_some()
    }

    pub fn neg(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::constant(-c),
            Node::Neg(u) => u.clone(),
            _ => Self::new(Node::Neg(self.clone())),
        }
    }

    pub fn conj(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::constant(c.conj()),
            Node::W => Self::wbar(),
            Node::Wbar => Self::w(),
            Node::Conj(u) => u.clone(),
            _ => Self::new(Node::Conj(self.clone())),
        }
    }

    pub fn re(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::real(c.re),
            _ => Self::new(Node::Re(self.clone())),
        }
    }

    pub fn im(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::real(c.im),
            _ => Self::new(Node::Im(self.clone())),
        }
    }

    pub fn abs(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::real(c.norm()),
            _ => Self::new(Node::Abs(self.clone())),
        }
    }

    pub fn exp(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::constant(c.exp()),
            _ => Self::new(Node::Exp(self.clone())),
        }
    }

    pub fn log(&self) -> Self {
        match self.node() {
            Node::Const(c) if !is_zero(*c) => Self::constant(c.ln()),
            _ => Self::new(Node::Log(self.clone())),
        }
    }

    pub fn sqrt(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::constant(c.sqrt()),
            _ => Self::new(Node::Sqrt(self.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::real(1.0);
        }
        if n == 1 {
            return self.clone();
        }
        match self.node() {
            Node::Const(c) if n > 0 || !is_zero(*c) => Self::constant(powi(*c, n)),
            // (u^m)^n = u^(mn) for integers m, n
            Node::PowInt(u, m) => u.powi(m * n),
            // exp(p log u)^n = exp(pn log u)
            Node::Pow(u, p) => u.pow(p * n as f64),
            Node::Sqrt(u) if n % 2 == 0 => u.powi(n / 2),
            Node::Abs(u) if n % 2 == 0 => u.mul(&u.conj()).powi(n / 2),
            _ => Self::new(Node::PowInt(self.clone(), n)),
        }
    }

    /// Constant power. Integer exponents become repeated multiplication.
    pub fn pow(&self, p: C64) -> Self {
        if let Some(n) = as_int(p) {
            return self.powi(n);
        }
        match self.node() {
            Node::Const(c) if !is_zero(*c) => Self::constant((p * c.ln()).exp()),
            _ => Self::new(Node::Pow(self.clone(), p)),
        }
    }

    /// General power; a non-constant exponent becomes `exp(b * log(a))`.
    pub fn pow_expr(&self, exponent: &ComplexExpr) -> Self {
        match exponent.as_const() {
            Some(p) => self.pow(p),
            None => exponent.mul(&self.log()).exp(),
        }
    }

    pub fn add(&self, other: &ComplexExpr) -> Self {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => Self::constant(a + b),
            (Node::Const(a), _) if is_zero(*a) => other.clone(),
            (_, Node::Const(b)) if is_zero(*b) => self.clone(),
            _ => Self::new(Node::Add(self.clone(), other.clone())),
        }
    }

    pub fn sub(&self, other: &ComplexExpr) -> Self {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => Self::constant(a - b),
            (Node::Const(a), _) if is_zero(*a) => other.neg(),
            (_, Node::Const(b)) if is_zero(*b) => self.clone(),
            _ => Self::new(Node::Sub(self.clone(), other.clone())),
        }
    }

    pub fn mul(&self, other: &ComplexExpr) -> Self {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => Self::constant(a * b),
            (Node::Const(a), _) if is_zero(*a) => self.clone(),
            (_, Node::Const(b)) if is_zero(*b) => other.clone(),
            (Node::Const(a), _) if is_one(*a) => other.clone(),
            (_, Node::Const(b)) if is_one(*b) => self.clone(),
            _ => Self::new(Node::Mul(self.clone(), other.clone())),
        }
    }

    pub fn div(&self, other: &ComplexExpr) -> Self {
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) if !is_zero(*b) => Self::constant(a / b),
            (Node::Const(a), _) if is_zero(*a) => self.clone(),
            (_, Node::Const(b)) if is_one(*b) => self.clone(),
            _ => Self::new(Node::Div(self.clone(), other.clone())),
        }
    }

    /// Symbolic Wirtinger derivative.
    pub fn wirtinger(&self, which: Wirtinger) -> Self {
        diff::wirtinger(self, which)
    }

    pub fn d_w(&self) -> Self {
        self.wirtinger(Wirtinger::DW)
    }

    pub fn d_wbar(&self) -> Self {
        self.wirtinger(Wirtinger::DWbar)
    }

    /// `∂_x = ∂_w + ∂_w̄`
    pub fn d_x(&self) -> Self {
        self.d_w().add(&self.d_wbar())
    }

    /// `∂_y = i (∂_w − ∂_w̄)`
    pub fn d_y(&self) -> Self {
        self.d_w()
            .sub(&self.d_wbar())
            .mul(&Self::constant(C64::new(0.0, 1.0)))
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::W | Node::Wbar => 1,
            Node::Neg(u)
            | Node::Conj(u)
            | Node::Re(u)
            | Node::Im(u)
            | Node::Abs(u)
            | Node::Exp(u)
            | Node::Log(u)
            | Node::Sqrt(u)
            | Node::PowInt(u, _)
            | Node::Pow(u, _) => 1 + u.size(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Evaluates the expression at `w`.
    pub fn eval(&self, w: C64) -> Result<C64, ExprError> {
        let v = self.eval_node(w)?;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(self.domain(w, "non-finite value"))
        }
    }

    fn domain(&self, w: C64, reason: &'static str) -> ExprError {
        ExprError::Domain {
            node: self.to_string(),
            at: w,
            reason,
        }
    }

    fn eval_node(&self, w: C64) -> Result<C64, ExprError> {
        Ok(match self.node() {
            Node::Const(c) => *c,
            Node::W => w,
            Node::Wbar => w.conj(),
            Node::Neg(u) => -u.eval_node(w)?,
            Node::Conj(u) => u.eval_node(w)?.conj(),
            Node::Re(u) => C64::new(u.eval_node(w)?.re, 0.0),
            Node::Im(u) => C64::new(u.eval_node(w)?.im, 0.0),
            Node::Abs(u) => C64::new(u.eval_node(w)?.norm(), 0.0),
            Node::Exp(u) => u.eval_node(w)?.exp(),
            Node::Log(u) => {
                let v = u.eval_node(w)?;
                if is_zero(v) {
                    return Err(self.domain(w, "logarithm of zero"));
                }
                v.ln()
            }
            Node::Sqrt(u) => u.eval_node(w)?.sqrt(),
            Node::PowInt(u, n) => {
                let v = u.eval_node(w)?;
                if *n < 0 && is_zero(v) {
                    return Err(self.domain(w, "division by zero"));
                }
                powi(v, *n)
            }
            Node::Pow(u, p) => {
                let v = u.eval_node(w)?;
                if is_zero(v) {
                    if p.re > 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        return Err(self.domain(w, "non-positive power of zero"));
                    }
                } else if p.im == 0.0 && v.im == 0.0 && v.re > 0.0 {
                    C64::new(v.re.powf(p.re), 0.0)
                } else if *p == C64::new(0.5, 0.0) {
                    v.sqrt()
                } else {
                    (p * v.ln()).exp()
                }
            }
            Node::Add(a, b) => a.eval_node(w)? + b.eval_node(w)?,
            Node::Sub(a, b) => a.eval_node(w)? - b.eval_node(w)?,
            Node::Mul(a, b) => a.eval_node(w)? * b.eval_node(w)?,
            Node::Div(a, b) => {
                let num = a.eval_node(w)?;
                let den = b.eval_node(w)?;
                if is_zero(den) {
                    return Err(self.domain(w, "division by zero"));
                }
                num / den
            }
        })
    }

    /// Collects the coefficients `c_0 .. c_n` when the expression is a
    /// polynomial in `w` alone.
    pub fn as_polynomial(&self) -> Option<Vec<C64>> {
        fn mul(a: &[C64], b: &[C64]) -> Vec<C64> {
            let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }
        fn add(a: &[C64], b: &[C64], sign: f64) -> Vec<C64> {
            let n = a.len().max(b.len());
            (0..n)
                .map(|k| {
                    a.get(k).copied().unwrap_or_default() + sign * b.get(k).copied().unwrap_or_default()
                })
                .collect()
        }
        let mut poly = match self.node() {
            Node::Const(c) => vec![*c],
            Node::W => vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            Node::Neg(u) => u.as_polynomial()?.iter().map(|c| -c).collect(),
            Node::Add(a, b) => add(&a.as_polynomial()?, &b.as_polynomial()?, 1.0),
            Node::Sub(a, b) => add(&a.as_polynomial()?, &b.as_polynomial()?, -1.0),
            Node::Mul(a, b) => mul(&a.as_polynomial()?, &b.as_polynomial()?),
            Node::Div(a, b) => {
                let d = b.as_const()?;
                a.as_polynomial()?.iter().map(|c| c / d).collect()
            }
            Node::PowInt(u, n) if *n >= 0 => {
                let base = u.as_polynomial()?;
                let mut acc = vec![C64::new(1.0, 0.0)];
                for _ in 0..*n {
                    acc = mul(&acc, &base);
                }
                acc
            }
            _ => return None,
        };
        while poly.len() > 1 && is_zero(*poly.last().unwrap()) {
            poly.pop();
        }
        Some(poly)
    }
}

/// Integer power by repeated squaring; negative exponents invert at the end.
pub(crate) fn powi(z: C64, n: i32) -> C64 {
    let mut base = z;
    let mut e = n.unsigned_abs();
    let mut acc = C64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if n < 0 {
        C64::new(1.0, 0.0) / acc
    } else {
        acc
    }
}

impl std::str::FromStr for ComplexExpr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hyperbolic_weight_values() {
        let e = ComplexExpr::parse("(1 - abs(w)^2)^(-2)").unwrap();
        assert_eq!(e.eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let v = e.eval(c(0.5, 0.0)).unwrap();
        assert!((v.re - 16.0 / 9.0).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn root_of_w2_plus_1() {
        let e = ComplexExpr::parse("w^2+1").unwrap();
        assert_eq!(e.eval(c(0.0, 1.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn modulus_identity_vanishes() {
        let e = ComplexExpr::parse("conj(w)*w - x^2 - y^2").unwrap();
        for &(a, b) in &[(0.3, -0.7), (1.5, 2.0), (-0.1, 0.0), (0.0, 3.0)] {
            assert!(e.eval(c(a, b)).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn domain_errors_name_the_node() {
        let e = ComplexExpr::parse("1/(w - 1)").unwrap();
        match e.eval(c(1.0, 0.0)) {
            Err(ExprError::Domain { node, .. }) => assert_eq!(node, "1/(w - 1)"),
            other => panic!("unexpected {other:?}"),
        }
        let e = ComplexExpr::parse("log(w)").unwrap();
        assert!(e.eval(c(0.0, 0.0)).is_err());
        let e = ComplexExpr::parse("abs(w)").unwrap();
        assert!(e.d_w().eval(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn radius_desugars_and_is_smooth_at_origin_when_squared() {
        let e = ComplexExpr::parse("1 + r^2").unwrap();
        assert_eq!(e.eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(e.d_w().eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let r = ComplexExpr::parse("r").unwrap();
        assert_eq!(r.eval(c(3.0, 4.0)).unwrap(), c(5.0, 0.0));
        assert_eq!(r.eval(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn polynomial_coefficients() {
        let e = ComplexExpr::parse("(w - 1)*(w + 2*i)").unwrap();
        let p = e.as_polynomial().unwrap();
        assert_eq!(p, vec![c(0.0, -2.0), c(-1.0, 2.0), c(1.0, 0.0)]);
        assert!(ComplexExpr::parse("conj(w)").unwrap().as_polynomial().is_none());
        assert!(ComplexExpr::parse("exp(w)").unwrap().as_polynomial().is_none());
    }

    #[test]
    fn powi_matches_repeated_products() {
        let z = c(0.3, -1.2);
        assert!((powi(z, 3) - z * z * z).norm() < 1e-15);
        assert!((powi(z, -2) - 1.0 / (z * z)).norm() < 1e-14);
    }
}
