//! Comparison of two solutions `g`, `h` with equal boundary values. Their
//! difference `F = g − h` satisfies `conj(F_w̄) = −ν F_w` with
//! `ν = Φ/(η g_w h_w)` away from the zeros of `Φ`.

use super::{boundary_values, TopologyError};
use crate::expr::C64;
use crate::grid::{d_w, d_wbar, GridField};

#[derive(Debug, Clone, Copy)]
pub struct UniquenessOptions {
    pub margin_steps: usize,
    /// Boundary traces may differ by at most this.
    pub trace_tol: f64,
    /// Arcs with `|F|` below this are left out of the argument variation.
    pub tol_f: f64,
    /// Nodes closer than this many spacings to a zero of `Φ` are left out of `G`.
    pub zero_radius_steps: f64,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        UniquenessOptions {
            margin_steps: 2,
            trace_tol: 1e-12,
            tol_f: 1e-10,
            zero_radius_steps: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub f: GridField,
    pub nu: GridField,
    /// `(1+|ν|)/(1−|ν|)` where `|ν| < 1`.
    pub k_f: GridField,
    /// `1/(|η g_w h_w| − |Φ|)` where the denominator exceeds `1e-12`.
    pub proxy: GridField,
    pub proxy_integral: f64,
    pub proxy_excluded: usize,
    pub boundary_tv: f64,
    /// Boundary length where `|F| ≤ tol_f`.
    pub tv_excluded_length: f64,
    pub max_f: f64,
    pub nu_max: f64,
    /// Largest `|conj(F_w̄) + ν F_w|` over `G`.
    pub beltrami_residual: f64,
    /// Smallest `|η g_w h_w| − |Φ|` over `G`.
    pub min_gap: f64,
    /// Nodes with `|ν| ≤ 0.99` where `1/(1−|ν|) ≤ K_F ≤ 2/(1−|ν|)` fails.
    pub comparability_violations: usize,
    /// Largest `|g − h|` at the nodes nearest to 0 and 1.
    pub anchor_gap: f64,
    /// The two fields are bitwise equal.
    pub identical: bool,
}

pub fn uniqueness_report(
    gs: &GridField,
    hs: &GridField,
    eta: &GridField,
    phi: &GridField,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport, TopologyError> {
    let grid = hs.grid().clone();
    if [gs, eta, phi].iter().any(|f| !f.grid().same_lattice(&grid)) {
        return Err(crate::grid::GridError::Mismatch.into());
    }
    let trace_gap = grid
        .boundary()
        .map(|k| (gs.get(k) - hs.get(k)).norm())
        .fold(0.0, f64::max);
    if !(trace_gap <= opts.trace_tol) {
        return Err(TopologyError::TraceMismatch { max: trace_gap });
    }
    let identical = gs.bit_eq(hs);
    let e = eta;
    let f = GridField::from_fn(grid.clone(), |k, _| gs.get(k) - hs.get(k));
    let (gw, hw) = (d_w(gs), d_w(hs));
    let (fw, fwb) = (d_w(&f), d_wbar(&f));
    let nan = C64::new(f64::NAN, f64::NAN);
    let nu = GridField::from_fn(grid.clone(), |k, _| {
        let d = e.get(k) * gw.get(k) * hw.get(k);
        if d.norm() > 0.0 {
            phi.get(k) / d
        } else {
            nan
        }
    });
    let k_f = nu.map(|v| {
        let m = v.norm();
        if m < 1.0 {
            C64::new((1.0 + m) / (1.0 - m), 0.0)
        } else {
            nan
        }
    });

    let scale = phi.max_abs_interior().max(1.0);
    let radius = opts.zero_radius_steps * grid.hx().max(grid.hy());
    let mut compact = grid.compact_submask(opts.margin_steps);
    let zeros: Vec<usize> = grid
        .masked()
        .filter(|&k| phi.get(k).norm() <= 1e-12 * scale)
        .collect();
    let (si, sj) = (
        (radius / grid.hx()).ceil() as isize,
        (radius / grid.hy()).ceil() as isize,
    );
    for z in zeros {
        let (i, j) = grid.ij(z);
        let p = grid.point_at(z);
        for dj in -sj..=sj {
            for di in -si..=si {
                let (a, b) = (i as isize + di, j as isize + dj);
                if a < 0 || b < 0 || a >= grid.nx() as isize || b >= grid.ny() as isize {
                    continue;
                }
                let q = grid.index(a as usize, b as usize);
                if (grid.point_at(q) - p).norm() <= radius {
                    compact[q] = false;
                }
            }
        }
    }
    if !compact.iter().any(|c| *c) {
        return Err(TopologyError::Invalid("compact subset is empty".into()));
    }

    let cell = grid.hx() * grid.hy();
    let mut proxy = vec![nan; grid.len()];
    let mut rep = UniquenessReport {
        f: f.clone(),
        nu: nu.clone(),
        k_f: k_f.clone(),
        proxy: GridField::constant(grid.clone(), nan),
        proxy_integral: 0.0,
        proxy_excluded: 0,
        boundary_tv: 0.0,
        tv_excluded_length: 0.0,
        max_f: f.max_abs_where(&(0..grid.len()).map(|k| grid.in_mask(k)).collect::<Vec<_>>()),
        nu_max: 0.0,
        beltrami_residual: 0.0,
        min_gap: f64::INFINITY,
        comparability_violations: 0,
        anchor_gap: 0.0,
        identical,
    };
    for k in (0..grid.len()).filter(|&k| compact[k]) {
        let gap = (e.get(k) * gw.get(k) * hw.get(k)).norm() - phi.get(k).norm();
        rep.min_gap = rep.min_gap.min(gap);
        if gap > 1e-12 {
            proxy[k] = C64::new(1.0 / gap, 0.0);
            rep.proxy_integral += cell / gap;
        } else {
            rep.proxy_excluded += 1;
        }
        let n = nu.get(k);
        let m = n.norm();
        rep.nu_max = rep.nu_max.max(m);
        if !identical {
            let r = (fwb.get(k).conj() + n * fw.get(k)).norm();
            rep.beltrami_residual = rep.beltrami_residual.max(r);
        }
        if m <= 0.99 {
            let kf = k_f.get(k).re;
            let lo = 1.0 / (1.0 - m);
            if !(kf >= lo * (1.0 - 1e-12) && kf <= 2.0 * lo * (1.0 + 1e-12)) {
                rep.comparability_violations += 1;
            }
        }
    }
    rep.proxy = GridField::new(grid.clone(), proxy);

    let fb = boundary_values(&f);
    let pts: Vec<C64> = grid.boundary_loop().into_iter().map(|k| grid.point_at(k)).collect();
    for k in 0..fb.len() {
        let k1 = (k + 1) % fb.len();
        let len = (pts[k1] - pts[k]).norm();
        if fb[k].norm() > opts.tol_f && fb[k1].norm() > opts.tol_f {
            rep.boundary_tv += (fb[k1] / fb[k]).arg().abs();
        } else {
            rep.tv_excluded_length += len;
        }
    }
    for a in [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] {
        if let Some(k) = grid.nearest_node(a) {
            rep.anchor_gap = rep.anchor_gap.max(f.get(k).norm());
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::ComplexExpr;
    use crate::grid::Grid;

    fn one(g: &Arc<Grid>) -> GridField {
        GridField::constant(g.clone(), C64::new(1.0, 0.0))
    }

    #[test]
    fn equal_fields_short_circuit() {
        let g = Arc::new(Grid::disk(33, 0.05).unwrap());
        let h = GridField::sample(&ComplexExpr::parse("w + 0.2*conj(w)").unwrap(), &g).unwrap();
        let phi = GridField::constant(g.clone(), C64::new(0.2, 0.0));
        let r = uniqueness_report(&h, &h, &one(&g), &phi, &Default::default()).unwrap();
        assert!(r.identical);
        assert_eq!(r.max_f, 0.0);
        assert!((r.nu_max - 0.2).abs() < 1e-12);
        assert_eq!(r.comparability_violations, 0);
        assert!(r.min_gap > 0.7);
    }

    #[test]
    fn perturbation_breaks_the_relation() {
        let g = Arc::new(Grid::disk(33, 0.05).unwrap());
        let h = GridField::sample(&ComplexExpr::parse("w + 0.2*conj(w)").unwrap(), &g).unwrap();
        let p = GridField::sample(&ComplexExpr::parse("w + 0.2*conj(w) + 0.01*(0.9025 - abs(w)^2)").unwrap(), &g)
            .unwrap();
        let bumped = GridField::from_fn(g.clone(), |k, _| {
            if g.kind(k) == crate::grid::NodeKind::Interior {
                p.get(k)
            } else {
                h.get(k)
            }
        });
        let phi = GridField::constant(g.clone(), C64::new(0.2, 0.0));
        let r = uniqueness_report(&h, &bumped, &one(&g), &phi, &Default::default()).unwrap();
        assert!(!r.identical);
        assert!(r.beltrami_residual > 1e-3, "{}", r.beltrami_residual);
        let r = uniqueness_report(&h, &h, &one(&g), &phi, &Default::default()).unwrap();
        assert_eq!(r.beltrami_residual, 0.0);
    }

    #[test]
    fn different_traces_are_rejected() {
        let g = Arc::new(Grid::disk(17, 0.05).unwrap());
        let a = GridField::sample(&ComplexExpr::w(), &g).unwrap();
        let b = a.scale(C64::new(1.1, 0.0));
        let phi = GridField::constant(g.clone(), C64::new(0.0, 0.0));
        let r = uniqueness_report(&a, &b, &one(&g), &phi, &Default::default());
        assert!(matches!(r, Err(TopologyError::TraceMismatch { .. })));
    }
}
