//! The criterion for a weight pulled back from the target, `η = α ∘ h`.
//! With `η_w = α_z(h) h_w + α_z̄(h) conj(h_w̄)` and `Φ = h_w conj(h_w̄) η`,
//! `Im(η_w² conj Φ) = Im(α_z(h)² h_w² conj Φ + |μ|² Φ conj(α_z(h)² h_w²))`,
//! which vanishes when `|μ| = 1`.

use super::{AnalysisError, TINY};
use crate::expr::C64;
use crate::grid::{d_w, d_wbar, GridField};
use crate::weight::{HoloData, Weight};

#[derive(Debug, Clone)]
pub struct PullbackReport {
    /// `Im(η_w² conj Φ)` by the chain rule, a real field on interior nodes.
    pub field: GridField,
    /// The two-term decomposition, same support.
    pub decomposition: GridField,
    pub max_abs_field: f64,
    /// Largest `|field − decomposition|`.
    pub identity_error: f64,
    /// Interior nodes with `1 − δ ≤ |μ| ≤ 1`.
    pub near_unit: usize,
    /// Largest `|field| / (1 − |μ|)` over those nodes with `|μ| < 1`.
    pub max_ratio: f64,
    /// Largest `|field|` where `|μ| = 1` to rounding.
    pub max_at_unit: f64,
}

pub fn pullback_criterion(
    alpha: &Weight,
    h: &GridField,
    phi: &HoloData,
    delta: f64,
) -> Result<PullbackReport, AnalysisError> {
    let g = h.grid().clone();
    let hw = d_w(h);
    let hwb = d_wbar(h);
    let p = phi.sample(&g)?;
    let nan = C64::new(f64::NAN, f64::NAN);
    let mut field = vec![nan; g.len()];
    let mut dec = vec![nan; g.len()];
    let mut rep = PullbackReport {
        field: GridField::constant(g.clone(), nan),
        decomposition: GridField::constant(g.clone(), nan),
        max_abs_field: 0.0,
        identity_error: 0.0,
        near_unit: 0,
        max_ratio: 0.0,
        max_at_unit: 0.0,
    };
    for k in g.interior() {
        let az = alpha.eta_w.eval(h.get(k))?;
        let (a, b) = (hw.get(k), hwb.get(k));
        let ew = az * a + az.conj() * b.conj();
        let f = (ew * ew * p.get(k).conj()).im;
        let m2 = if a.norm() < TINY { f64::NAN } else { b.norm_sqr() / a.norm_sqr() };
        let t = az * az * a * a;
        let d = (t * p.get(k).conj() + m2 * p.get(k) * t.conj()).im;
        field[k] = C64::new(f, 0.0);
        dec[k] = C64::new(d, 0.0);
        rep.max_abs_field = rep.max_abs_field.max(f.abs());
        if d.is_finite() {
            rep.identity_error = rep.identity_error.max((f - d).abs());
        }
        let m = m2.sqrt();
        if m >= 1.0 - delta && m <= 1.0 + 1e-12 {
            rep.near_unit += 1;
            if 1.0 - m > 1e-12 {
                rep.max_ratio = rep.max_ratio.max(f.abs() / (1.0 - m));
            } else {
                rep.max_at_unit = rep.max_at_unit.max(f.abs());
            }
        }
    }
    rep.field = GridField::new(g.clone(), field);
    rep.decomposition = GridField::new(g, dec);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::ComplexExpr;
    use crate::grid::{Bounds, Grid};
    use crate::weight::{make_weight, WeightSpec};

    fn custom(t: &str) -> Weight {
        make_weight(&WeightSpec::Custom(t.into())).unwrap()
    }

    #[test]
    fn constant_alpha_gives_zero() {
        let g = Arc::new(Grid::disk(17, 0.05).unwrap());
        let h = GridField::sample(&ComplexExpr::parse("w + 0.2*conj(w)^2").unwrap(), &g).unwrap();
        let r = pullback_criterion(&Weight::constant(2.0).unwrap(), &h, &HoloData::constant(C64::new(1.0, 0.0)), 0.1).unwrap();
        assert_eq!(r.max_abs_field, 0.0);
    }

    #[test]
    fn holomorphic_map_matches_symbolic_field() {
        let g = Arc::new(Grid::rect(Bounds::new(0.1, 0.6, 0.1, 0.6), 33, 33).unwrap());
        let h = GridField::sample(&ComplexExpr::parse("w^2").unwrap(), &g).unwrap();
        let alpha = custom("1 + abs(w)^2");
        let r = pullback_criterion(&alpha, &h, &HoloData::constant(C64::new(1.0, 0.0)), 0.1).unwrap();
        // the composite weight is 1 + |w|⁴
        let eta = custom("1 + abs(w)^4");
        for k in g.interior() {
            let e = eta.eta_w.eval(g.point_at(k)).unwrap();
            let exact = (e * e).im;
            assert!((r.field.get(k).re - exact).abs() < 1e-4 * (1.0 + exact.abs()));
        }
        assert!(r.identity_error < 1e-12 * (1.0 + r.max_abs_field));
    }

    #[test]
    fn folded_map_cancels() {
        let g = Arc::new(Grid::rect(Bounds::new(0.0, 1.0, 0.0, 1.0), 33, 33).unwrap());
        let h = GridField::sample(&ComplexExpr::parse("log(1 + x)").unwrap(), &g).unwrap();
        let alpha = custom("exp(2*re(w))");
        let r = pullback_criterion(&alpha, &h, &HoloData::constant(C64::new(0.25, 0.0)), 0.1).unwrap();
        assert!(r.max_abs_field < 1e-12);
        assert_eq!(r.near_unit, g.interior_count());
    }
}
