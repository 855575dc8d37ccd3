//! The second-order form of the equation. Away from `|μ| = 1`, holomorphy of
//! `h_w conj(h_w̄) η` is equivalent to
//! `h_ww̄ = (|μ|² h_w η_w̄ − h_w̄ η_w) / (η (1 − |μ|²))`; when `Φ ≡ 1`, `μ` is real
//! and this is `h_ww̄ = (h_w̄/2)(−η_x/((1+μ)η) + i η_y/((1−μ)η))`.

use super::{AnalysisError, DerivedFields, MU_FLOOR};
use crate::expr::{ComplexExpr, C64};
use crate::grid::{d_w, d_wbar, d_x, d_y, GridField};
use crate::solver::Norms;
use crate::weight::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaDerivatives {
    /// Exact derivatives of the weight expression.
    Symbolic,
    /// Finite differences of the sampled weight, so every derivative in the
    /// check is discrete.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy)]
pub struct DeltahOptions {
    pub mu_floor: f64,
    pub eta_derivatives: EtaDerivatives,
}

impl Default for DeltahOptions {
    fn default() -> Self {
        DeltahOptions {
            mu_floor: MU_FLOOR,
            eta_derivatives: EtaDerivatives::FiniteDifference,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeltahReport {
    /// `|h_ww̄ − RHS|` as a real field; undefined off the evaluated set.
    pub residual: GridField,
    pub norms: Norms,
    /// Interior nodes skipped because `|1 − |μ|| < mu_floor` or `μ` undefined.
    pub degenerate: Vec<usize>,
    pub evaluated: usize,
}

/// `|d_w(d_wbar h) − q|` on interior nodes, with `q` the right-hand side above.
pub fn deltah_check(
    h: &GridField,
    eta: &Weight,
    df: &DerivedFields,
    opts: &DeltahOptions,
) -> Result<DeltahReport, AnalysisError> {
    let g = h.grid().clone();
    let e = eta.sample(&g)?;
    let ew = match opts.eta_derivatives {
        EtaDerivatives::Symbolic => eta.sample_w(&g)?,
        EtaDerivatives::FiniteDifference => {
            let (ex, ey) = (d_x(&e), d_y(&e));
            GridField::from_fn(g.clone(), |k, _| C64::new(ex.get(k).re, -ey.get(k).re) / 2.0)
        }
    };
    let lhs = d_w(&d_wbar(h));
    let mut vals = vec![C64::new(f64::NAN, f64::NAN); g.len()];
    let mut degenerate = Vec::new();
    let mut mask = vec![false; g.len()];
    for k in g.interior() {
        let m = df.mu.get(k);
        if !df.mu.is_defined(k) || (1.0 - m.norm()).abs() < opts.mu_floor {
            degenerate.push(k);
            continue;
        }
        let (a, b) = (df.hw.get(k), df.hwbar.get(k));
        let m2 = m.norm_sqr();
        let q = (m2 * a * ew.get(k).conj() - b * ew.get(k)) / (e.get(k).re * (1.0 - m2));
        vals[k] = C64::new((lhs.get(k) - q).norm(), 0.0);
        mask[k] = true;
    }
    let residual = GridField::new(g, vals);
    Ok(DeltahReport {
        norms: Norms::of(&residual, &mask),
        evaluated: mask.iter().filter(|m| **m).count(),
        residual,
        degenerate,
    })
}

/// `(h_w̄/2)(−η_x/((1+μ)η) + i η_y/((1−μ)η))` with `μ = h_w̄/h_w`, as an
/// expression.
pub fn lemma_rhs(h: &ComplexExpr, eta: &Weight) -> ComplexExpr {
    let hwb = h.d_wbar();
    let mu = hwb.div(&h.d_w());
    let one = ComplexExpr::real(1.0);
    let i = ComplexExpr::constant(C64::new(0.0, 1.0));
    let t1 = eta.eta_x.neg().div(&one.add(&mu).mul(&eta.eta));
    let t2 = i.mul(&eta.eta_y).div(&one.sub(&mu).mul(&eta.eta));
    hwb.mul(&ComplexExpr::real(0.5)).mul(&t1.add(&t2))
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SymbolicCheck {
    pub points: usize,
    pub max_abs_diff: f64,
    pub max_lhs: f64,
}

/// Both sides of the `Φ ≡ 1` form evaluated from their expressions.
pub fn deltah_symbolic(
    h: &ComplexExpr,
    eta: &Weight,
    points: &[C64],
) -> Result<SymbolicCheck, AnalysisError> {
    let lhs = h.d_wbar().d_w();
    let rhs = lemma_rhs(h, eta);
    let mut max_abs_diff = 0.0f64;
    let mut max_lhs = 0.0f64;
    for &p in points {
        let l = lhs.eval(p)?;
        let r = rhs.eval(p)?;
        max_abs_diff = max_abs_diff.max((l - r).norm());
        max_lhs = max_lhs.max(l.norm());
    }
    Ok(SymbolicCheck {
        points: points.len(),
        max_abs_diff,
        max_lhs,
    })
}
