//! Derived fields of a map `h` and checkers for the identities they satisfy.

mod acheck;
mod criterion;
mod deltah;
mod dichotomy;
mod pullback;

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{ExprError, C64};
use crate::grid::{d_w, d_wbar, Grid, GridError, GridField};
use crate::solver::EPS_J;
use crate::weight::{Weight, WeightError};

pub use acheck::{quasiregular_a_check, ACheck};
pub use criterion::{criterion_field, CriterionOptions, CriterionReport};
pub use deltah::{
    deltah_check, deltah_symbolic, lemma_rhs, DeltahOptions, DeltahReport, EtaDerivatives,
    SymbolicCheck,
};
pub use dichotomy::{dichotomy_eta_const, Dichotomy, DichotomyCase, FoldFit};
pub use pullback::{pullback_criterion, PullbackReport};

/// `|h_w|` below this leaves `μ` undefined.
pub const TINY: f64 = 1e-12;
pub const MU_FLOOR: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("compact subset is empty after margins")]
    EmptyCompact,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct DerivedFields {
    pub hw: GridField,
    pub hwbar: GridField,
    /// `h_w̄ / h_w`, undefined where `|h_w| < TINY`.
    pub mu: GridField,
    /// `|h_w|² − |h_w̄|²`, stored as a real field.
    pub jac: GridField,
    /// `(1+|μ|)/(1−|μ|)`, undefined where `|μ| ≥ 1 − mu_floor`.
    pub k: GridField,
    /// `1/(1−|μ|)`, same support as `k`.
    pub k_alt: GridField,
    /// `h_w conj(h_w̄) η`.
    pub hopf: GridField,
    pub undefined_mu: usize,
    pub undefined_k: usize,
    pub max_mu: f64,
    pub min_jac: f64,
    /// `J ≥ −ε_J` and `K` finite at every interior node.
    pub finite_distortion: bool,
}

impl DerivedFields {
    pub fn grid(&self) -> &Arc<Grid> {
        self.hw.grid()
    }
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Derived fields from finite differences of `h` and a sampled weight.
pub fn derive_sampled(h: &GridField, eta: &GridField, mu_floor: f64) -> DerivedFields {
    let g = h.grid().clone();
    let hw = d_w(h);
    let hwbar = d_wbar(h);
    let undefined = C64::new(f64::NAN, f64::NAN);
    let mu = GridField::from_fn(g.clone(), |k, _| {
        let a = hw.get(k);
        if a.norm() < TINY {
            undefined
        } else {
            hwbar.get(k) / a
        }
    });
    let jac = GridField::from_fn(g.clone(), |k, _| real(hw.get(k).norm_sqr() - hwbar.get(k).norm_sqr()));
    let kf = |alt: bool| {
        GridField::from_fn(g.clone(), |k, _| {
            let m = mu.get(k).norm();
            if !(m < 1.0 - mu_floor) {
                undefined
            } else if alt {
                real(1.0 / (1.0 - m))
            } else {
                real((1.0 + m) / (1.0 - m))
            }
        })
    };
    let kk = kf(false);
    let k_alt = kf(true);
    let hopf = GridField::from_fn(g.clone(), |k, _| hw.get(k) * hwbar.get(k).conj() * eta.get(k));
    let interior = h.interior_mask();
    let count = |f: &GridField| g.interior().filter(|&k| !f.is_defined(k)).count();
    let undefined_mu = count(&mu);
    let undefined_k = count(&kk);
    let max_mu = mu.max_abs_where(&interior);
    let min_jac = jac.fold_where(&interior, f64::INFINITY, |a, v| a.min(v.re));
    DerivedFields {
        finite_distortion: undefined_k == 0 && min_jac >= -EPS_J,
        hw,
        hwbar,
        mu,
        jac,
        k: kk,
        k_alt,
        hopf,
        undefined_mu,
        undefined_k,
        max_mu,
        min_jac,
    }
}

pub fn derive(h: &GridField, eta: &Weight) -> Result<DerivedFields, AnalysisError> {
    let e = eta.sample(h.grid())?;
    Ok(derive_sampled(h, &e, MU_FLOOR))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Holomorphy {
    pub max_residual: f64,
    pub l2_residual: f64,
}

/// Norms of `∂_w̄ Φ_h` over interior nodes.
pub fn hopf_holomorphy(df: &DerivedFields) -> Holomorphy {
    hopf_holomorphy_on(df, &df.hopf.interior_mask())
}

pub fn hopf_holomorphy_on(df: &DerivedFields, mask: &[bool]) -> Holomorphy {
    let r = d_wbar(&df.hopf);
    let n = crate::solver::Norms::of(&r, mask);
    Holomorphy {
        max_residual: n.max,
        l2_residual: n.l2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ComplexExpr;

    fn setup(text: &str) -> (GridField, Weight) {
        let g = Arc::new(Grid::disk(33, 0.05).unwrap());
        let h = GridField::sample(&ComplexExpr::parse(text).unwrap(), &g).unwrap();
        (h, Weight::constant(1.0).unwrap())
    }

    #[test]
    fn identity_fields() {
        let (h, eta) = setup("w");
        let df = derive(&h, &eta).unwrap();
        for k in h.grid().interior() {
            assert!(df.mu.get(k).norm() < 1e-14);
            assert!((df.jac.get(k).re - 1.0).abs() < 1e-14);
            assert!((df.k.get(k).re - 1.0).abs() < 1e-14);
            assert!(df.hopf.get(k).norm() < 1e-14);
        }
        assert!(df.finite_distortion);
        assert!(hopf_holomorphy(&df).max_residual < 1e-12);
    }

    #[test]
    fn linear_map_fields() {
        let (h, eta) = setup("w + 0.5*conj(w)");
        let df = derive(&h, &eta).unwrap();
        for k in h.grid().interior() {
            assert!((df.mu.get(k) - 0.5).norm() < 1e-13);
            assert!((df.k.get(k).re - 3.0).abs() < 1e-12);
            assert!((df.k_alt.get(k).re - 2.0).abs() < 1e-12);
            assert!((df.jac.get(k).re - 0.75).abs() < 1e-13);
            assert!((df.hopf.get(k) - 0.5).norm() < 1e-13);
        }
    }

    #[test]
    fn fold_has_no_finite_distortion() {
        let (h, eta) = setup("x");
        let df = derive(&h, &eta).unwrap();
        assert!(!df.finite_distortion);
        assert_eq!(df.undefined_k, h.grid().interior_count());
        assert_eq!(df.max_mu, 1.0);
    }
}
