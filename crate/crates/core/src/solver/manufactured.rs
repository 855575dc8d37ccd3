//! Closed-form triples `(h, η, Φ)` with `h_w conj(h_w̄) η = Φ` exactly.

use super::SolverError;
use crate::expr::{ComplexExpr, C64};
use crate::weight::{HoloData, Weight, WeightKind};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `h = w + s(x)` with `s'(x) = slope + curvature·x` on `x ∈ [x_lo, x_hi]`;
    /// `η = 4/(s'(2 + s'))`, `Φ ≡ 1`.
    ShearPerturbation {
        slope: f64,
        curvature: f64,
        x_lo: f64,
        x_hi: f64,
    },
    /// `h = a w + b conj(w)`, `η ≡ 1`, `Φ = a conj(b)`.
    Linear { a: C64, b: C64 },
}

impl Family {
    pub fn a() -> Self {
        Family::ShearPerturbation {
            slope: 0.2,
            curvature: 0.1,
            x_lo: -1.0,
            x_hi: 1.0,
        }
    }

    pub fn b(a: C64, b: C64) -> Self {
        Family::Linear { a, b }
    }
}

#[derive(Debug, Clone)]
pub struct Manufactured {
    pub family: Family,
    pub h: ComplexExpr,
    pub eta: Weight,
    pub phi: HoloData,
}

fn c(v: f64) -> ComplexExpr {
    ComplexExpr::real(v)
}

pub fn make_manufactured(family: Family) -> Result<Manufactured, SolverError> {
    match family {
        Family::ShearPerturbation {
            slope,
            curvature,
            x_lo,
            x_hi,
        } => {
            if !(x_lo < x_hi) {
                return Err(SolverError::Invalid("empty x-range".into()));
            }
            // η(s') = 4/(s'(2+s')) ≥ 1 iff 0 < s' ≤ √5 − 1; s' is affine, so
            // the endpoints decide, but sample anyway to report the worst spot
            for k in 0..=1000 {
                let x = x_lo + (x_hi - x_lo) * k as f64 / 1000.0;
                let d = slope + curvature * x;
                let value = if d > 0.0 { 4.0 / (d * (2.0 + d)) } else { f64::NAN };
                if !(value >= 1.0) {
                    return Err(SolverError::BelowOne { x, value });
                }
            }
            let x = ComplexExpr::x();
            let sp = c(slope).add(&c(curvature).mul(&x));
            let s = c(slope).mul(&x).add(&c(curvature / 2.0).mul(&x.powi(2)));
            let h = ComplexExpr::w().add(&s);
            let eta = c(4.0).div(&sp.mul(&c(2.0).add(&sp)));
            Ok(Manufactured {
                family,
                h,
                eta: Weight::new(eta, WeightKind::XOnly)?,
                phi: HoloData::constant(C64::new(1.0, 0.0)),
            })
        }
        Family::Linear { a, b } => {
            let h = ComplexExpr::constant(a)
                .mul(&ComplexExpr::w())
                .add(&ComplexExpr::constant(b).mul(&ComplexExpr::wbar()));
            Ok(Manufactured {
                family,
                h,
                eta: Weight::constant(1.0)?,
                phi: HoloData::constant(a * b.conj()),
            })
        }
    }
}
