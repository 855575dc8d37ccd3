//! Conformal weights `η ≥ 1`, holomorphic data `Φ` with its zero set, and
//! the natural coordinate in which `Φ ≡ 1`.

mod chart;
mod holo;
pub mod quad;
mod roots;

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{identifiers, ComplexExpr, ExprError, C64};
use crate::grid::{Grid, GridError, GridField};

pub use chart::{
    natural_chart, pullback_weight, sqrt_branch, ChartDump, ChartOptions, NaturalChart,
    PullbackWeight, Region, SqrtBranch,
};
pub use holo::{argument_count, find_zeros, HoloData, Zero};
pub use roots::poly_roots;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("weight is not real at {at}: imaginary part {im:e}")]
    NotReal { at: C64, im: f64 },
    #[error("weight drops below 1: min {min} at {at}")]
    BelowOne { min: f64, at: C64 },
    #[error("{kind} weight may only use `{var}`, found `{found}`")]
    WrongVariable {
        kind: &'static str,
        var: &'static str,
        found: String,
    },
    #[error("data is not holomorphic: max |d_wbar| = {max:e}")]
    NotHolomorphic { max: f64 },
    #[error("zero of the data on the contour near {at}")]
    ZeroOnContour { at: C64 },
    #[error("zero search did not converge: {0}")]
    NoConvergence(String),
    #[error("region contains or touches the zero {zero}")]
    TouchesZero { zero: C64 },
    #[error("square-root branch jumps between {a} and {b}")]
    Discontinuity { a: C64, b: C64 },
    #[error("Newton iteration for the inverse chart left the region at z = {z}")]
    LeftRegion { z: C64 },
    #[error("point {at} lies outside the chart region")]
    OutsideRegion { at: C64 },
    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: C64, b: C64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Constant,
    Hyperbolic,
    Radial,
    XOnly,
    Custom,
}

/// How a weight is described in configs: a constant, the hyperbolic metric,
/// or expression text.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "expr")]
pub enum WeightSpec {
    Constant(f64),
    Hyperbolic,
    /// Profile in `r` only.
    Radial(String),
    /// Profile in `x` only.
    XOnly(String),
    Custom(String),
}

#[derive(Debug, Clone)]
pub struct Weight {
    pub eta: ComplexExpr,
    pub eta_w: ComplexExpr,
    pub eta_x: ComplexExpr,
    pub eta_y: ComplexExpr,
    pub kind: WeightKind,
}

const HYPERBOLIC: &str = "(1 - abs(w)^2)^(-2)";

/// Points used to reject non-real weights at construction time.
fn reality_probe() -> Vec<C64> {
    let mut pts = Vec::new();
    for a in 0..5 {
        for b in 0..5 {
            pts.push(C64::new(-0.8 + 0.4 * a as f64 + 0.013, -0.8 + 0.4 * b as f64 + 0.007));
        }
    }
    pts
}

fn only_uses(
    text: &str,
    kind: &'static str,
    var: &'static str,
) -> Result<(), WeightError> {
    const ALLOWED: [&str; 10] = ["i", "pi", "e", "conj", "abs", "re", "im", "exp", "log", "sqrt"];
    for id in identifiers(text)? {
        if id != var && !ALLOWED.contains(&id.as_str()) {
            return Err(WeightError::WrongVariable { kind, var, found: id });
        }
    }
    Ok(())
}

pub fn make_weight(spec: &WeightSpec) -> Result<Weight, WeightError> {
    let (eta, kind) = match spec {
        WeightSpec::Constant(c) => {
            if *c < 1.0 - 1e-12 {
                return Err(WeightError::BelowOne {
                    min: *c,
                    at: C64::new(0.0, 0.0),
                });
            }
            (ComplexExpr::real(*c), WeightKind::Constant)
        }
        WeightSpec::Hyperbolic => (ComplexExpr::parse(HYPERBOLIC)?, WeightKind::Hyperbolic),
        WeightSpec::Radial(t) => {
            only_uses(t, "radial", "r")?;
            (ComplexExpr::parse(t)?, WeightKind::Radial)
        }
        WeightSpec::XOnly(t) => {
            only_uses(t, "x-only", "x")?;
            (ComplexExpr::parse(t)?, WeightKind::XOnly)
        }
        WeightSpec::Custom(t) => (ComplexExpr::parse(t)?, WeightKind::Custom),
    };
    Weight::new(eta, kind)
}

impl Weight {
    /// Attaches symbolic derivatives after a reality check on a fixed probe set.
    pub fn new(eta: ComplexExpr, kind: WeightKind) -> Result<Self, WeightError> {
        for p in reality_probe() {
            if let Ok(v) = eta.eval(p) {
                if v.im.abs() > 1e-14 * (1.0 + v.re.abs()) {
                    return Err(WeightError::NotReal { at: p, im: v.im });
                }
            }
        }
        let eta_w = eta.d_w();
        let eta_wbar = eta.d_wbar();
        // η real: η_x = 2 Re η_w and η_y = -2 Im η_w, built from both operators
        let eta_x = eta_w.add(&eta_wbar).re();
        let eta_y = eta_w
            .sub(&eta_wbar)
            .mul(&ComplexExpr::constant(C64::new(0.0, 1.0)))
            .re();
        Ok(Weight {
            eta,
            eta_w,
            eta_x,
            eta_y,
            kind,
        })
    }

    pub fn constant(c: f64) -> Result<Self, WeightError> {
        make_weight(&WeightSpec::Constant(c))
    }

    pub fn hyperbolic() -> Self {
        make_weight(&WeightSpec::Hyperbolic).expect("built-in weight")
    }

    pub fn is_constant(&self) -> bool {
        self.eta.is_const()
    }

    pub fn eval(&self, w: C64) -> Result<f64, ExprError> {
        Ok(self.eta.eval(w)?.re)
    }

    fn sample_real(e: &ComplexExpr, g: &Arc<Grid>) -> Result<GridField, GridError> {
        Ok(GridField::sample(e, g)?.map(|v| C64::new(v.re, 0.0)))
    }

    /// `η` on every masked node, imaginary parts dropped.
    pub fn sample(&self, g: &Arc<Grid>) -> Result<GridField, GridError> {
        Self::sample_real(&self.eta, g)
    }

    pub fn sample_x(&self, g: &Arc<Grid>) -> Result<GridField, GridError> {
        Self::sample_real(&self.eta_x, g)
    }

    pub fn sample_y(&self, g: &Arc<Grid>) -> Result<GridField, GridError> {
        Self::sample_real(&self.eta_y, g)
    }

    pub fn sample_w(&self, g: &Arc<Grid>) -> Result<GridField, GridError> {
        GridField::sample(&self.eta_w, g)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct WeightReport {
    pub min_eta: f64,
    pub argmin: [f64; 2],
    /// Largest difference quotient `|η(p) − η(q)| / |p − q|` over lattice edges.
    pub max_lipschitz: f64,
    pub max_imag: f64,
    pub passed: bool,
}

/// Checks `η ≥ 1` on every masked node of `g`.
pub fn validate_weight(eta: &Weight, g: &Grid) -> Result<WeightReport, WeightError> {
    let g = Arc::new(g.clone());
    let raw = GridField::sample(&eta.eta, &g)?;
    let mut min_eta = f64::INFINITY;
    let mut argmin = C64::new(0.0, 0.0);
    let mut max_imag = 0.0f64;
    for k in g.masked() {
        let v = raw.get(k);
        max_imag = max_imag.max(v.im.abs());
        if v.re < min_eta {
            min_eta = v.re;
            argmin = g.point_at(k);
        }
    }
    if max_imag > 1e-14 * (1.0 + min_eta.abs()) {
        return Err(WeightError::NotReal {
            at: argmin,
            im: max_imag,
        });
    }
    let mut max_lipschitz = 0.0f64;
    for k in g.masked() {
        let (i, j) = g.ij(k);
        for (di, dj) in [(1usize, 0usize), (0, 1)] {
            let (a, b) = (i + di, j + dj);
            if a < g.nx() && b < g.ny() && g.in_mask(g.index(a, b)) {
                let q = g.index(a, b);
                let d = (g.point_at(q) - g.point_at(k)).norm();
                max_lipschitz = max_lipschitz.max((raw.get(q).re - raw.get(k).re).abs() / d);
            }
        }
    }
    if min_eta < 1.0 - 1e-12 {
        return Err(WeightError::BelowOne {
            min: min_eta,
            at: argmin,
        });
    }
    Ok(WeightReport {
        min_eta,
        argmin: [argmin.re, argmin.im],
        max_lipschitz,
        max_imag,
        passed: true,
    })
}
