//! Preimage counts by winding numbers of the bilinear interpolant. On a
//! lattice cell the interpolant maps each edge to a straight segment, so the
//! winding of a cell boundary is that of the polygon through its four corner
//! values; summing over cells counts preimages with multiplicity.

use super::{polygon_distance, polygon_winding, TopologyError};
use crate::expr::C64;
use crate::grid::GridField;

#[derive(Debug, Clone, serde::Serialize)]
pub struct Preimages {
    /// Sum of cell windings: preimages counted with orientation.
    pub count: i64,
    /// Cells with nonzero winding.
    pub cells: usize,
    pub locations: Vec<C64>,
    /// Cells whose boundary image passes within rounding distance of the value.
    pub flagged: usize,
}

fn bilinear(c: &[C64; 4], s: f64, t: f64) -> C64 {
    c[0] * ((1.0 - s) * (1.0 - t)) + c[1] * (s * (1.0 - t)) + c[2] * (s * t) + c[3] * ((1.0 - s) * t)
}

/// Newton on the bilinear interpolant of one cell, from its centre.
fn locate(c: &[C64; 4], value: C64) -> (f64, f64) {
    let (mut s, mut t) = (0.5, 0.5);
    for _ in 0..40 {
        let r = bilinear(c, s, t) - value;
        let ps = (c[1] - c[0]) * (1.0 - t) + (c[2] - c[3]) * t;
        let pt = (c[3] - c[0]) * (1.0 - s) + (c[2] - c[1]) * s;
        let det = ps.re * pt.im - pt.re * ps.im;
        if det == 0.0 {
            break;
        }
        let ds = (pt.im * r.re - pt.re * r.im) / det;
        let dt = (ps.re * r.im - ps.im * r.re) / det;
        s = (s - ds).clamp(0.0, 1.0);
        t = (t - dt).clamp(0.0, 1.0);
        if ds.abs().max(dt.abs()) < 1e-15 {
            break;
        }
    }
    (s, t)
}

/// Counts preimages of `value` over all lattice cells with four masked corners
/// accepted by `keep` (called with the cell centre).
pub fn preimage_count_where(h: &GridField, value: C64, keep: impl Fn(C64) -> bool) -> Preimages {
    let g = h.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = Preimages {
        count: 0,
        cells: 0,
        locations: Vec::new(),
        flagged: 0,
    };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let ks = [g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1), g.index(i, j + 1)];
            if !ks.iter().all(|&k| g.in_mask(k) && h.is_defined(k)) {
                continue;
            }
            let p0 = g.point(i, j);
            let centre = p0 + C64::new(g.hx(), g.hy()) / 2.0;
            if !keep(centre) {
                continue;
            }
            let c = [h.get(ks[0]), h.get(ks[1]), h.get(ks[2]), h.get(ks[3])];
            let scale = c.iter().map(|v| v.norm()).fold(value.norm(), f64::max);
            if polygon_distance(&c, value) <= 1e-12 * (1.0 + scale) {
                out.flagged += 1;
            }
            let w = polygon_winding(&c, value);
            if w != 0 {
                out.count += w;
                out.cells += 1;
                let (s, t) = locate(&c, value);
                out.locations.push(p0 + C64::new(s * g.hx(), t * g.hy()));
            }
        }
    }
    out
}

pub fn preimage_count(h: &GridField, value: C64) -> Preimages {
    preimage_count_where(h, value, |_| true)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OpennessRow {
    pub r: f64,
    /// Winding of the image of `|w − w0| = r` about `h(w0)`.
    pub winding: i64,
    /// Distance from `h(w0)` to that image.
    pub min_dist: f64,
    /// Radius about `h(w0)` within which sampled values were all hit inside
    /// the disk; zero when the check failed.
    pub rho_verified: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OpennessReport {
    pub w0: C64,
    pub value: C64,
    pub rows: Vec<OpennessRow>,
    pub open: bool,
}

const CIRCLE_SAMPLES: usize = 256;
const TEST_VALUES: usize = 8;

/// Checks that small circles about `w0` wind positively about `h(w0)` and
/// that nearby values have preimages inside the corresponding disks.
pub fn openness_probe(h: &GridField, w0: C64, radii: &[f64]) -> Result<OpennessReport, TopologyError> {
    let value = h.interpolate(w0).ok_or(TopologyError::Outside { at: w0 })?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut image = Vec::with_capacity(CIRCLE_SAMPLES);
        for k in 0..CIRCLE_SAMPLES {
            let p = w0 + C64::from_polar(r, std::f64::consts::TAU * k as f64 / CIRCLE_SAMPLES as f64);
            image.push(h.interpolate(p).ok_or(TopologyError::Outside { at: p })?);
        }
        let winding = polygon_winding(&image, value);
        let min_dist = polygon_distance(&image, value);
        let mut rho_verified = 0.0;
        if winding >= 1 && min_dist > 0.0 {
            let rho = min_dist / 2.0;
            let hit = (0..TEST_VALUES).all(|k| {
                let v = value
                    + C64::from_polar(rho, std::f64::consts::TAU * (k as f64 + 0.5) / TEST_VALUES as f64);
                preimage_count_where(h, v, |c| (c - w0).norm() < r).count >= 1
            });
            if hit {
                rho_verified = rho;
            }
        }
        rows.push(OpennessRow {
            r,
            winding,
            min_dist,
            rho_verified,
            ok: winding >= 1 && rho_verified > 0.0,
        });
    }
    Ok(OpennessReport {
        w0,
        value,
        open: !rows.is_empty() && rows.iter().all(|r| r.ok),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::ComplexExpr;
    use crate::grid::{Bounds, Grid};

    fn sampled(t: &str, n: usize) -> GridField {
        let g = Arc::new(Grid::rect(Bounds::square(1.0), n, n).unwrap());
        GridField::sample(&ComplexExpr::parse(t).unwrap(), &g).unwrap()
    }

    #[test]
    fn identity_has_one_preimage() {
        let p = preimage_count(&sampled("w", 33), C64::new(0.3, 0.1));
        assert_eq!(p.count, 1);
        assert!((p.locations[0] - C64::new(0.3, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn square_has_two_preimages() {
        // ±0.5 are lattice nodes here, so the tie-breaking rule is exercised
        let p = preimage_count(&sampled("w^2", 65), C64::new(0.25, 0.0));
        assert_eq!(p.count, 2);
        let p = preimage_count(&sampled("w^2", 64), C64::new(0.25, 0.0));
        assert_eq!(p.count, 2);
        let mut xs: Vec<f64> = p.locations.iter().map(|z| z.re).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 0.5).abs() < 1e-3 && (xs[1] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn count_is_stable_under_refinement() {
        let v = C64::new(0.1, -0.2);
        let a = preimage_count(&sampled("w^3 + 0.1*conj(w)", 33), v).count;
        let b = preimage_count(&sampled("w^3 + 0.1*conj(w)", 65), v).count;
        assert_eq!(a, b);
    }

    #[test]
    fn openness_of_model_maps() {
        let radii = [0.1, 0.2];
        let r = openness_probe(&sampled("w", 65), C64::new(0.0, 0.0), &radii).unwrap();
        assert!(r.open);
        assert!((r.rows[0].min_dist - 0.1).abs() < 1e-3);
        let r = openness_probe(&sampled("x", 65), C64::new(0.0, 0.0), &radii).unwrap();
        assert!(!r.open);
        assert_eq!(r.rows[0].winding, 0);
        let r = openness_probe(&sampled("w^2", 65), C64::new(0.0, 0.0), &radii).unwrap();
        assert!(r.open);
        assert_eq!(r.rows[0].winding, 2);
    }
}
