//! The openness criterion `Im(η_w² conj Φ)` and the sets where it degenerates.

use std::sync::Arc;

use super::AnalysisError;
use crate::expr::C64;
use crate::grid::{Grid, GridField};
use crate::weight::{find_zeros, HoloData, Weight};

/// Relative size of a numerical zero.
pub const TOL_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct CriterionOptions {
    /// Grid steps trimmed from the boundary to form the compact set `G`.
    pub margin_steps: usize,
    /// Radius, in grid spacings, of the disks about zeros of `Φ` removed from `G`.
    pub zero_radius_steps: f64,
}

impl Default for CriterionOptions {
    fn default() -> Self {
        CriterionOptions {
            margin_steps: 2,
            zero_radius_steps: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    /// `Im(η_w² conj Φ)` as a real field.
    pub im_field: GridField,
    /// `|im_field| ≤ 1e-9 (1 + |η_w² conj Φ|)`.
    pub problematic_mask: Vec<bool>,
    /// `Φ conj(η_w)² ≥ 0` within the same tolerance.
    pub alignment_mask: Vec<bool>,
    /// `√Φ η_w̄` real, principal branch.
    pub sqrt_real_mask: Vec<bool>,
    pub compact: Vec<bool>,
    pub ess_inf: f64,
    pub ess_inf_abs: f64,
    pub min_abs_eta_y: f64,
    pub max_abs_eta_x: f64,
    pub problematic_fraction: f64,
    pub alignment_fraction: f64,
    pub zeros: Vec<C64>,
}

fn is_zero(v: C64) -> bool {
    v.im.abs() <= TOL_REL * (1.0 + v.norm())
}

pub fn criterion_field(
    eta: &Weight,
    phi: &HoloData,
    g: &Arc<Grid>,
    opts: &CriterionOptions,
) -> Result<CriterionReport, AnalysisError> {
    let ew = eta.sample_w(g)?;
    let ex = eta.sample_x(g)?;
    let ey = eta.sample_y(g)?;
    let p = phi.sample(g)?;
    let n = g.len();
    let mut v = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut problematic = vec![false; n];
    let mut alignment = vec![false; n];
    let mut sqrt_real = vec![false; n];
    for k in g.masked() {
        let e = ew.get(k);
        let f = e * e * p.get(k).conj();
        v[k] = f;
        problematic[k] = is_zero(f);
        let a = f.conj();
        alignment[k] = is_zero(a) && a.re >= -TOL_REL * (1.0 + a.norm());
        sqrt_real[k] = is_zero(p.get(k).sqrt() * e.conj());
    }
    let im_field = GridField::from_fn(g.clone(), |k, _| C64::new(v[k].im, 0.0));

    let zeros: Vec<C64> = if phi.phi.is_const() {
        Vec::new()
    } else if !phi.zeros.is_empty() {
        phi.zeros.iter().map(|z| z.at).collect()
    } else {
        find_zeros(phi, g.bounds())?.into_iter().map(|z| z.at).collect()
    };
    let radius = opts.zero_radius_steps * g.hx().max(g.hy());
    let mut compact = g.compact_submask(opts.margin_steps);
    for k in 0..n {
        if compact[k] && zeros.iter().any(|z| (g.point_at(k) - z).norm() <= radius) {
            compact[k] = false;
        }
    }
    if !compact.iter().any(|c| *c) {
        return Err(AnalysisError::EmptyCompact);
    }
    let over = |f: &dyn Fn(usize) -> f64, init: f64, op: fn(f64, f64) -> f64| {
        (0..n).filter(|&k| compact[k]).map(f).fold(init, op)
    };
    let ess_inf = over(&|k| v[k].im, f64::INFINITY, f64::min);
    let ess_inf_abs = over(&|k| v[k].im.abs(), f64::INFINITY, f64::min);
    let min_abs_eta_y = over(&|k| ey.get(k).re.abs(), f64::INFINITY, f64::min);
    let max_abs_eta_x = over(&|k| ex.get(k).re.abs(), 0.0, f64::max);
    let masked = g.masked().count().max(1) as f64;
    let frac = |m: &[bool]| m.iter().filter(|b| **b).count() as f64 / masked;
    Ok(CriterionReport {
        problematic_fraction: frac(&problematic),
        alignment_fraction: frac(&alignment),
        im_field,
        problematic_mask: problematic,
        alignment_mask: alignment,
        sqrt_real_mask: sqrt_real,
        compact,
        ess_inf,
        ess_inf_abs,
        min_abs_eta_y,
        max_abs_eta_x,
        zeros,
    })
}
