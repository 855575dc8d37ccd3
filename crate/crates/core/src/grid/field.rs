use std::sync::Arc;

use rayon::prelude::*;

use super::{ExecMode, Grid, GridError, NodeKind};
use crate::expr::{ComplexExpr, C64};

pub(crate) const UNDEFINED: C64 = C64::new(f64::NAN, f64::NAN);

/// Complex samples on a masked grid. `Outside` nodes and nodes where the
/// defining formula is singular hold NaN.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: Arc<Grid>,
    values: Vec<C64>,
}

impl GridField {
    /// Wraps raw values; outside nodes are forced to NaN.
    pub fn new(grid: Arc<Grid>, mut values: Vec<C64>) -> Self {
        assert_eq!(values.len(), grid.len());
        for (k, v) in values.iter_mut().enumerate() {
            if grid.kind(k) == NodeKind::Outside {
                *v = UNDEFINED;
            }
        }
        GridField { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(usize, C64) -> C64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                if grid.in_mask(k) {
                    f(k, grid.point_at(k))
                } else {
                    UNDEFINED
                }
            })
            .collect();
        GridField { grid, values }
    }

    pub fn constant(grid: Arc<Grid>, c: C64) -> Self {
        Self::from_fn(grid, |_, _| c)
    }

    /// Evaluates `e` at every masked node.
    pub fn sample(e: &ComplexExpr, grid: &Arc<Grid>) -> Result<Self, GridError> {
        Self::sample_with(e, grid, ExecMode::Seq)
    }

    pub fn sample_with(
        e: &ComplexExpr,
        grid: &Arc<Grid>,
        mode: ExecMode,
    ) -> Result<Self, GridError> {
        let eval = |k: usize| -> Result<C64, GridError> {
            if !grid.in_mask(k) {
                return Ok(UNDEFINED);
            }
            let p = grid.point_at(k);
            e.eval(p).map_err(|source| {
                let (i, j) = grid.ij(k);
                GridError::Domain { i, j, at: p, source }
            })
        };
        let values: Result<Vec<C64>, GridError> = match mode {
            ExecMode::Seq => (0..grid.len()).map(eval).collect(),
            ExecMode::Par => (0..grid.len()).into_par_iter().map(eval).collect(),
        };
        Ok(GridField {
            grid: grid.clone(),
            values: values?,
        })
    }

    /// Like [`sample`](Self::sample) but marks failing nodes undefined
    /// instead of returning the first error.
    pub fn sample_lenient(e: &ComplexExpr, grid: &Arc<Grid>) -> Self {
        Self::from_fn(grid.clone(), |_, p| e.eval(p).unwrap_or(UNDEFINED))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> C64 {
        self.values[idx]
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn set(&mut self, idx: usize, v: C64) {
        self.values[idx] = v;
    }

    pub fn is_defined(&self, idx: usize) -> bool {
        self.grid.in_mask(idx) && self.values[idx].re.is_finite() && self.values[idx].im.is_finite()
    }

    /// Masked nodes whose value is not finite.
    pub fn undefined_count(&self) -> usize {
        self.grid.masked().filter(|&k| !self.is_defined(k)).count()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::from_fn(self.grid.clone(), |k, _| f(self.values[k]))
    }

    pub fn zip(&self, other: &GridField, f: impl Fn(C64, C64) -> C64) -> Result<Self, GridError> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && !self.grid.same_lattice(&other.grid) {
            return Err(GridError::Mismatch);
        }
        Ok(Self::from_fn(self.grid.clone(), |k, _| {
            f(self.values[k], other.values[k])
        }))
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| c * v)
    }

    /// Maximum of `|value|` over nodes selected by `mask` that are defined.
    pub fn max_abs_where(&self, mask: &[bool]) -> f64 {
        self.fold_where(mask, 0.0, |acc, v| acc.max(v.norm()))
    }

    /// Root-mean-square of `|value|` over selected defined nodes.
    pub fn rms_where(&self, mask: &[bool]) -> f64 {
        let mut n = 0usize;
        let s = self.fold_where(mask, 0.0, |acc, v| {
            n += 1;
            acc + v.norm_sqr()
        });
        if n == 0 {
            0.0
        } else {
            (s / n as f64).sqrt()
        }
    }

    pub fn fold_where<A>(&self, mask: &[bool], init: A, mut f: impl FnMut(A, C64) -> A) -> A {
        let mut acc = init;
        for k in 0..self.values.len() {
            if mask[k] && self.is_defined(k) {
                acc = f(acc, self.values[k]);
            }
        }
        acc
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        self.grid.kinds().iter().map(|k| *k == NodeKind::Interior).collect()
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.max_abs_where(&self.interior_mask())
    }

    /// Bilinear interpolation; `None` outside the lattice or when a corner of
    /// the containing cell is outside the mask or undefined.
    pub fn interpolate(&self, p: C64) -> Option<C64> {
        let g = &self.grid;
        let b = g.bounds();
        if !b.contains(p) {
            return None;
        }
        let s = (p.re - b.x0) / g.hx();
        let t = (p.im - b.y0) / g.hy();
        let i = (s.floor() as usize).min(g.nx() - 2);
        let j = (t.floor() as usize).min(g.ny() - 2);
        let (fs, ft) = (s - i as f64, t - j as f64);
        let corners = [
            g.index(i, j),
            g.index(i + 1, j),
            g.index(i, j + 1),
            g.index(i + 1, j + 1),
        ];
        if !corners.iter().all(|&k| self.is_defined(k)) {
            return None;
        }
        let [a, b2, c, d] = corners.map(|k| self.values[k]);
        Some(a * (1.0 - fs) * (1.0 - ft) + b2 * fs * (1.0 - ft) + c * (1.0 - fs) * ft + d * fs * ft)
    }

    /// Bitwise equality of the stored values; any two NaNs compare equal.
    pub fn bit_eq(&self, other: &GridField) -> bool {
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| same(a.re, b.re) && same(a.im, b.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Bounds;

    #[test]
    fn sampling_reports_domain_nodes() {
        let g = Arc::new(Grid::rect(Bounds::square(1.0), 5, 5).unwrap());
        let e = ComplexExpr::parse("(1 - abs(w)^2)^(-2)").unwrap();
        match GridField::sample(&e, &g) {
            Err(GridError::Domain { at, .. }) => assert!((at.norm() - 1.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let lenient = GridField::sample_lenient(&e, &g);
        assert_eq!(lenient.undefined_count(), 4);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_functions() {
        let g = Arc::new(Grid::rect(Bounds::square(1.0), 9, 9).unwrap());
        let f = GridField::from_fn(g, |_, p| C64::new(p.re * p.im + 2.0 * p.re, p.im));
        let q = C64::new(0.13, -0.71);
        let v = f.interpolate(q).unwrap();
        assert!((v - C64::new(q.re * q.im + 2.0 * q.re, q.im)).norm() < 1e-14);
        assert!(f.interpolate(C64::new(1.5, 0.0)).is_none());
    }

    #[test]
    fn parallel_sampling_is_bitwise_identical() {
        let g = Arc::new(Grid::disk(65, 0.05).unwrap());
        let e = ComplexExpr::parse("exp(x)*w^2 + conj(w)/(2 + abs(w)^2)").unwrap();
        let a = GridField::sample_with(&e, &g, ExecMode::Seq).unwrap();
        let b = GridField::sample_with(&e, &g, ExecMode::Par).unwrap();
        assert!(a.bit_eq(&b));
    }
}
