//! Solutions with `Φ ≡ 1` satisfy `h_w̄ = A(w, h_w) h_w/|h_w|` with
//! `A(w, ζ) = min((1+k)/2 |ζ|, 1/(η |ζ|))`, and lie where the second branch
//! is active.

use super::{AnalysisError, DerivedFields};
use crate::expr::C64;
use crate::grid::GridField;
use crate::weight::Weight;

#[derive(Debug, Clone)]
pub struct ACheck {
    /// `|h_w̄ − A(w, h_w) h_w/|h_w||` as a real field on interior nodes.
    pub residual: GridField,
    /// Largest residual over nodes in the outer regime.
    pub max_residual: f64,
    pub max_residual_all: f64,
    /// Nodes where `|h_w|² < 2/((1+k)η)`, so the linear branch of `A` is active.
    pub inner: Vec<usize>,
    pub outer: usize,
}

pub fn quasiregular_a_check(
    df: &DerivedFields,
    eta: &Weight,
    k: f64,
) -> Result<ACheck, AnalysisError> {
    if !(0.0..1.0).contains(&k) {
        return Err(AnalysisError::Invalid(format!("distortion bound k = {k} outside [0, 1)")));
    }
    let g = df.grid().clone();
    let e = eta.sample(&g)?;
    let mut vals = vec![C64::new(f64::NAN, f64::NAN); g.len()];
    let mut inner = Vec::new();
    let mut outer = 0usize;
    let mut max_residual = 0.0f64;
    let mut max_residual_all = 0.0f64;
    for n in g.interior() {
        let z = df.hw.get(n);
        let a = z.norm();
        let eta = e.get(n).re;
        let lin = (1.0 + k) / 2.0 * a;
        let hyp = 1.0 / (eta * a);
        let r = if a > 0.0 {
            (df.hwbar.get(n) - lin.min(hyp) * z / a).norm()
        } else {
            f64::INFINITY
        };
        vals[n] = C64::new(r, 0.0);
        max_residual_all = max_residual_all.max(r);
        if a * a < 2.0 / ((1.0 + k) * eta) {
            inner.push(n);
        } else {
            outer += 1;
            max_residual = max_residual.max(r);
        }
    }
    Ok(ACheck {
        residual: GridField::new(g, vals),
        max_residual,
        max_residual_all,
        inner,
        outer,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::analysis::derive;
    use crate::expr::ComplexExpr;
    use crate::grid::{Bounds, Grid};
    use crate::solver::{make_manufactured, Family};

    #[test]
    fn family_a_lies_in_outer_regime() {
        let m = make_manufactured(Family::a()).unwrap();
        let g = Arc::new(Grid::rect(Bounds::square(1.0), 33, 33).unwrap());
        let h = GridField::sample(&m.h, &g).unwrap();
        let df = derive(&h, &m.eta).unwrap();
        let r = quasiregular_a_check(&df, &m.eta, df.max_mu).unwrap();
        assert!(r.inner.is_empty());
        assert!(r.max_residual < 1e-10, "{}", r.max_residual);
    }

    #[test]
    fn identity_is_not_a_solution() {
        let g = Arc::new(Grid::disk(17, 0.05).unwrap());
        let h = GridField::sample(&ComplexExpr::w(), &g).unwrap();
        let eta = Weight::constant(1.0).unwrap();
        let r = quasiregular_a_check(&derive(&h, &eta).unwrap(), &eta, 0.5).unwrap();
        assert!(r.max_residual_all > 0.5);
        assert_eq!(r.inner.len(), g.interior_count());
    }
}
