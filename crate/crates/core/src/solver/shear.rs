//! Shear solutions `h(w) = a(x)` for weights depending on `x` alone. With
//! `h_w = h_w̄ = a'/2`, the equation `h_w conj(h_w̄) η = c²` reads
//! `a' √η = 2c`.

use std::sync::Arc;

use super::{Norms, SolverError};
use crate::expr::C64;
use crate::grid::{d_w, d_wbar, Grid, GridError, GridField};
use crate::weight::quad::integrate;
use crate::weight::{Weight, WeightKind};

const TABLE_POINTS: usize = 257;
const QUAD_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ShearSolution {
    pub eta: Weight,
    pub c: f64,
    pub x0: f64,
    pub a0: f64,
    pub interval: (f64, f64),
    /// `(x, a(x))` on a uniform partition of the interval.
    pub table: Vec<[f64; 2]>,
    /// Largest `|a'(x) √η(x) − 2c|` over the table.
    pub identity_error: f64,
    pub quadrature_error: f64,
}

fn eta_at(eta: &Weight, x: f64) -> Result<f64, SolverError> {
    let v = eta.eval(C64::new(x, 0.0)).map_err(|source| {
        SolverError::Grid(GridError::Domain {
            i: 0,
            j: 0,
            at: C64::new(x, 0.0),
            source,
        })
    })?;
    if !(v >= 1.0 - 1e-12) {
        return Err(SolverError::BelowOne { x, value: v });
    }
    Ok(v)
}

fn quad(eta: &Weight, a: f64, b: f64) -> Result<(f64, f64), SolverError> {
    let mut bad = None;
    let mut f = |x: f64| match eta_at(eta, x) {
        Ok(v) => C64::new(1.0 / v.sqrt(), 0.0),
        Err(e) => {
            bad.get_or_insert(e);
            C64::new(0.0, 0.0)
        }
    };
    let r = integrate(&mut f, a, b, QUAD_TOL, QUAD_TOL);
    if let Some(e) = bad {
        return Err(e);
    }
    let r = r.ok_or(SolverError::Quadrature { a, b })?;
    Ok((r.value.re, r.error))
}

/// Tabulates `a(x) = a0 + 2c ∫_{x0}^x dt/√η(t)` on `interval`.
pub fn shear(
    eta: &Weight,
    c: f64,
    x0: f64,
    a0: f64,
    interval: (f64, f64),
) -> Result<ShearSolution, SolverError> {
    if !matches!(eta.kind, WeightKind::XOnly | WeightKind::Constant) {
        return Err(SolverError::Invalid("shear needs an x-only weight".into()));
    }
    let (lo, hi) = interval;
    if !(c > 0.0) || !(lo < hi) || x0 < lo || x0 > hi {
        return Err(SolverError::Invalid(format!(
            "shear needs c > 0 and x0 in [{lo}, {hi}]"
        )));
    }
    let xs: Vec<f64> = (0..TABLE_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (TABLE_POINTS - 1) as f64)
        .collect();
    let start = xs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x0).abs().total_cmp(&(b.1 - x0).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut a = vec![0.0; xs.len()];
    let mut qerr = 0.0;
    let (offset, e) = quad(eta, x0, xs[start])?;
    qerr += e;
    a[start] = a0 + 2.0 * c * offset;
    for k in start + 1..xs.len() {
        let (v, e) = quad(eta, xs[k - 1], xs[k])?;
        qerr += e;
        a[k] = a[k - 1] + 2.0 * c * v;
    }
    for k in (0..start).rev() {
        let (v, e) = quad(eta, xs[k + 1], xs[k])?;
        qerr += e;
        a[k] = a[k + 1] + 2.0 * c * v;
    }
    let mut identity_error = 0.0f64;
    for &x in &xs {
        let ax = 2.0 * c / eta_at(eta, x)?.sqrt();
        identity_error = identity_error.max((ax * eta_at(eta, x)?.sqrt() - 2.0 * c).abs());
    }
    Ok(ShearSolution {
        eta: eta.clone(),
        c,
        x0,
        a0,
        interval,
        table: xs.into_iter().zip(a).map(|(x, a)| [x, a]).collect(),
        identity_error,
        quadrature_error: 2.0 * c * qerr,
    })
}

impl ShearSolution {
    /// `a(x)`, integrated from the nearest table node.
    pub fn a_at(&self, x: f64) -> Result<f64, SolverError> {
        let (lo, hi) = self.interval;
        if x < lo || x > hi {
            return Err(SolverError::Invalid(format!("x = {x} outside [{lo}, {hi}]")));
        }
        let n = self.table.len() - 1;
        let k = (((x - lo) / (hi - lo)) * n as f64).round() as usize;
        let [xk, ak] = self.table[k.min(n)];
        let (v, _) = quad(&self.eta, xk, x)?;
        Ok(ak + 2.0 * self.c * v)
    }

    pub fn derivative(&self, x: f64) -> Result<f64, SolverError> {
        Ok(2.0 * self.c / eta_at(&self.eta, x)?.sqrt())
    }

    /// `h(w) = a(x)` on every masked node.
    pub fn sample(&self, g: &Arc<Grid>) -> Result<GridField, SolverError> {
        let mut vals = vec![C64::new(f64::NAN, f64::NAN); g.len()];
        for k in g.masked() {
            vals[k] = C64::new(self.a_at(g.point_at(k).re)?, 0.0);
        }
        Ok(GridField::new(g.clone(), vals))
    }

    /// `|a'² η / 4 − c²|` with the exact derivative, on masked nodes.
    pub fn hopf_residual(&self, g: &Arc<Grid>) -> Result<Norms, SolverError> {
        let mut r = GridField::constant(g.clone(), C64::new(0.0, 0.0));
        for k in g.masked() {
            let x = g.point_at(k).re;
            let d = self.derivative(x)?;
            let e = eta_at(&self.eta, x)?;
            r.set(k, C64::new(d * d * e / 4.0 - self.c * self.c, 0.0));
        }
        let mask: Vec<bool> = (0..g.len()).map(|k| g.in_mask(k)).collect();
        Ok(Norms::of(&r, &mask))
    }

    /// The same residual with finite-difference derivatives of the sampled
    /// field, on interior nodes.
    pub fn hopf_residual_fd(&self, g: &Arc<Grid>) -> Result<Norms, SolverError> {
        let h = self.sample(g)?;
        let eta = self.eta.sample(g)?;
        let (hw, hwb) = (d_w(&h), d_wbar(&h));
        let c2 = self.c * self.c;
        let r = GridField::from_fn(g.clone(), |k, _| hw.get(k) * hwb.get(k).conj() * eta.get(k) - c2);
        Ok(Norms::of(&r, &r.interior_mask()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{make_weight, WeightSpec};

    fn xonly(t: &str) -> Weight {
        make_weight(&WeightSpec::XOnly(t.into())).unwrap()
    }

    #[test]
    fn constant_weight_gives_identity_shear() {
        let s = shear(&Weight::constant(1.0).unwrap(), 0.5, 0.0, 0.0, (-1.0, 1.0)).unwrap();
        for [x, a] in &s.table {
            assert!((a - x).abs() < 1e-14);
        }
    }

    #[test]
    fn log_and_asinh_antiderivatives() {
        let s = shear(&xonly("(1 + x)^2"), 0.5, 0.0, 0.0, (0.0, 1.0)).unwrap();
        let err = s
            .table
            .iter()
            .map(|[x, a]| (a - (1.0 + x).ln()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
        let s = shear(&xonly("1 + x^2"), 0.5, 0.0, 0.0, (-2.0, 2.0)).unwrap();
        for x in [-1.7, -0.3, 0.0, 0.9, 2.0] {
            assert!((s.a_at(x).unwrap() - f64::asinh(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_in_c_and_increasing() {
        let eta = xonly("1 + x^2");
        let a = shear(&eta, 0.5, 0.3, 0.0, (-1.0, 1.0)).unwrap();
        let b = shear(&eta, 1.5, 0.3, 0.0, (-1.0, 1.0)).unwrap();
        for (p, q) in a.table.iter().zip(&b.table) {
            assert!((3.0 * p[1] - q[1]).abs() < 1e-14);
        }
        assert!(a.table.windows(2).all(|w| w[1][1] > w[0][1]));
    }

    #[test]
    fn rejects_weight_below_one() {
        let r = shear(&xonly("0.5 + x^2"), 0.5, 0.0, 0.0, (-1.0, 1.0));
        assert!(matches!(r, Err(SolverError::BelowOne { .. })));
    }
}
