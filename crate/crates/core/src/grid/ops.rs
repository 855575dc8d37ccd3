//! Finite-difference operators. Centred second-order stencils where both
//! neighbours are in the mask, one-sided second-order stencils otherwise.

use super::field::{GridField, UNDEFINED};
use crate::expr::C64;

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn stencil_first(f: &GridField, axis: Axis) -> GridField {
    let g = f.grid().clone();
    let (h, di, dj) = match axis {
        Axis::X => (g.hx(), 1isize, 0isize),
        Axis::Y => (g.hy(), 0, 1),
    };
    GridField::from_fn(g.clone(), |k, _| {
        let (i, j) = g.ij(k);
        let (i, j) = (i as isize, j as isize);
        let has = |s: isize| g.in_mask_ij(i + s * di, j + s * dj);
        let v = |s: isize| f.get(g.index((i + s * di) as usize, (j + s * dj) as usize));
        if has(1) && has(-1) {
            (v(1) - v(-1)) / (2.0 * h)
        } else if has(1) && has(2) {
            (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
        } else if has(-1) && has(-2) {
            (3.0 * v(0) - 4.0 * v(-1) + v(-2)) / (2.0 * h)
        } else if has(1) {
            (v(1) - v(0)) / h
        } else if has(-1) {
            (v(0) - v(-1)) / h
        } else {
            UNDEFINED
        }
    })
}

fn stencil_second(f: &GridField, axis: Axis) -> GridField {
    let g = f.grid().clone();
    let (h, di, dj) = match axis {
        Axis::X => (g.hx(), 1isize, 0isize),
        Axis::Y => (g.hy(), 0, 1),
    };
    let h2 = h * h;
    GridField::from_fn(g.clone(), |k, _| {
        let (i, j) = g.ij(k);
        let (i, j) = (i as isize, j as isize);
        let has = |s: isize| g.in_mask_ij(i + s * di, j + s * dj);
        let v = |s: isize| f.get(g.index((i + s * di) as usize, (j + s * dj) as usize));
        if has(1) && has(-1) {
            (v(1) - 2.0 * v(0) + v(-1)) / h2
        } else if has(1) && has(2) && has(3) {
            (2.0 * v(0) - 5.0 * v(1) + 4.0 * v(2) - v(3)) / h2
        } else if has(-1) && has(-2) && has(-3) {
            (2.0 * v(0) - 5.0 * v(-1) + 4.0 * v(-2) - v(-3)) / h2
        } else if has(1) && has(2) {
            (v(0) - 2.0 * v(1) + v(2)) / h2
        } else if has(-1) && has(-2) {
            (v(0) - 2.0 * v(-1) + v(-2)) / h2
        } else {
            UNDEFINED
        }
    })
}

pub fn d_x(f: &GridField) -> GridField {
    stencil_first(f, Axis::X)
}

pub fn d_y(f: &GridField) -> GridField {
    stencil_first(f, Axis::Y)
}

pub fn d_xx(f: &GridField) -> GridField {
    stencil_second(f, Axis::X)
}

pub fn d_yy(f: &GridField) -> GridField {
    stencil_second(f, Axis::Y)
}

// Written componentwise so that d_w(conj f) == conj(d_wbar f) bit for bit.
fn combine(fx: C64, fy: C64, sign: f64) -> C64 {
    C64::new(
        (fx.re + sign * fy.im) / 2.0,
        (fx.im - sign * fy.re) / 2.0,
    )
}

/// `∂_w f = (f_x − i f_y)/2`
pub fn d_w(f: &GridField) -> GridField {
    let fx = d_x(f);
    let fy = d_y(f);
    GridField::from_fn(f.grid().clone(), |k, _| combine(fx.get(k), fy.get(k), 1.0))
}

/// `∂_w̄ f = (f_x + i f_y)/2`
pub fn d_wbar(f: &GridField) -> GridField {
    let fx = d_x(f);
    let fy = d_y(f);
    GridField::from_fn(f.grid().clone(), |k, _| combine(fx.get(k), fy.get(k), -1.0))
}

/// Five-point Laplacian on interior nodes, one-sided second derivatives on
/// the boundary.
pub fn laplacian(f: &GridField) -> GridField {
    let fxx = d_xx(f);
    let fyy = d_yy(f);
    GridField::from_fn(f.grid().clone(), |k, _| fxx.get(k) + fyy.get(k))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::ComplexExpr;
    use crate::grid::{Bounds, Grid};

    fn sq(n: usize) -> Arc<Grid> {
        Arc::new(Grid::rect(Bounds::square(1.0), n, n).unwrap())
    }

    fn field(e: &str, g: &Arc<Grid>) -> GridField {
        GridField::sample(&ComplexExpr::parse(e).unwrap(), g).unwrap()
    }

    #[test]
    fn constants_have_zero_derivative() {
        for g in [sq(9), Arc::new(Grid::disk(17, 0.05).unwrap())] {
            let f = field("3 - 2*i", &g);
            assert_eq!(d_w(&f).max_abs_where(&vec![true; g.len()]), 0.0);
        }
    }

    #[test]
    fn identity_map_derivatives_are_exact() {
        for g in [sq(9), Arc::new(Grid::disk(33, 0.05).unwrap())] {
            let f = field("w", &g);
            let all = vec![true; g.len()];
            assert!(d_wbar(&f).max_abs_where(&all) < 1e-13);
            assert!(d_w(&f).map(|v| v - 1.0).max_abs_where(&all) < 1e-13);
        }
    }

    #[test]
    fn harmonic_quadratic_has_zero_laplacian() {
        let g = sq(17);
        let f = field("x^2 - y^2", &g);
        assert!(laplacian(&f).max_abs_interior() < 1e-10);
    }

    #[test]
    fn conjugation_identity_is_exact() {
        let g = Arc::new(Grid::disk(33, 0.1).unwrap());
        let f = field("exp(w)*conj(w) + x^3", &g);
        let a = d_w(&f.conj());
        let b = d_wbar(&f).conj();
        // exact equality; only the sign of zero may differ
        for k in g.masked() {
            assert_eq!(a.get(k), b.get(k));
        }
    }

    #[test]
    fn one_sided_stencils_are_second_order_exact_on_quadratics() {
        let g = sq(9);
        let f = field("x^2 + 3*x*y - y^2", &g);
        let fx = d_x(&f);
        for k in 0..g.len() {
            let p = g.point_at(k);
            assert!((fx.get(k) - (2.0 * p.re + 3.0 * p.im)).norm() < 1e-12);
        }
        let lap = laplacian(&f);
        for k in 0..g.len() {
            assert!(lap.get(k).norm() < 1e-11);
        }
    }
}
