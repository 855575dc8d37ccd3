//! Masked rectangular lattices and complex fields sampled on them.
//!
//! A [`Grid`] is a uniform lattice over a rectangle with a per-node
//! [`NodeKind`]. Interior nodes always have their full 8-neighbourhood inside
//! the mask, so centred stencils never read an `Outside` node there.
//! Undefined field values are stored as NaN and propagate through stencils.

mod csv;
mod field;
mod ops;

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{ExprError, C64};

pub use self::csv::{read_csv, write_csv};
pub use field::GridField;
pub use ops::{d_w, d_wbar, d_x, d_xx, d_y, d_yy, laplacian};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid too small: need at least 3x3 nodes, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("degenerate bounds [{x0}, {x1}] x [{y0}, {y1}]")]
    Bounds { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("evaluation failed at node ({i}, {j}) = {at}: {source}")]
    Domain {
        i: usize,
        j: usize,
        at: C64,
        #[source]
        source: ExprError,
    },
    #[error("fields live on different grids")]
    Mismatch,
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Interior => "interior",
            NodeKind::Boundary => "boundary",
            NodeKind::Outside => "outside",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bounds {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Bounds { x0, x1, y0, y1 }
    }

    pub fn square(half: f64) -> Self {
        Bounds::new(-half, half, -half, half)
    }

    pub fn contains(&self, p: C64) -> bool {
        p.re >= self.x0 && p.re <= self.x1 && p.im >= self.y0 && p.im <= self.y1
    }
}

/// How the interior mask was produced; needed to re-mask on refinement.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Rect,
    Disk { center: C64, radius: f64 },
    /// Mask read from a field dump.
    Custom,
}

/// Serial or rayon-parallel per-node evaluation. Both produce identical bits:
/// only independent per-node work is ever parallelised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    #[default]
    Seq,
    Par,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bounds: Bounds,
    nx: usize,
    ny: usize,
    shape: Shape,
    kinds: Vec<NodeKind>,
}

pub const DEFAULT_NODES: usize = 129;
pub const DEFAULT_DISK_MARGIN: f64 = 0.05;

impl Grid {
    fn check(bounds: Bounds, nx: usize, ny: usize) -> Result<(), GridError> {
        if nx < 3 || ny < 3 {
            return Err(GridError::TooSmall { nx, ny });
        }
        let ok = bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0;
        if !ok || !(bounds.x0.is_finite() && bounds.x1.is_finite() && bounds.y0.is_finite() && bounds.y1.is_finite()) {
            return Err(GridError::Bounds {
                x0: bounds.x0,
                x1: bounds.x1,
                y0: bounds.y0,
                y1: bounds.y1,
            });
        }
        Ok(())
    }

    fn from_predicate(
        bounds: Bounds,
        nx: usize,
        ny: usize,
        shape: Shape,
        inside: impl Fn(f64, f64) -> bool,
    ) -> Result<Self, GridError> {
        Self::check(bounds, nx, ny)?;
        let mut g = Grid {
            bounds,
            nx,
            ny,
            shape,
            kinds: vec![NodeKind::Outside; nx * ny],
        };
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let p = g.point(i, j);
                if inside(p.re, p.im) {
                    g.kinds[j * nx + i] = NodeKind::Interior;
                }
            }
        }
        g.mark_boundary();
        Ok(g)
    }

    fn mark_boundary(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        let mut kinds = self.kinds.clone();
        for j in 0..ny {
            for i in 0..nx {
                if self.kinds[j * nx + i] == NodeKind::Interior {
                    continue;
                }
                let touches = self
                    .neighbours8(i, j)
                    .any(|(a, b)| self.kinds[b * nx + a] == NodeKind::Interior);
                kinds[j * nx + i] = if touches {
                    NodeKind::Boundary
                } else {
                    NodeKind::Outside
                };
            }
        }
        self.kinds = kinds;
    }

    fn neighbours8(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        (-1isize..=1)
            .flat_map(move |dj| (-1isize..=1).map(move |di| (di, dj)))
            .filter(|&(di, dj)| di != 0 || dj != 0)
            .filter_map(move |(di, dj)| {
                let a = i as isize + di;
                let b = j as isize + dj;
                (a >= 0 && b >= 0 && a < nx && b < ny).then_some((a as usize, b as usize))
            })
    }

    /// Rectangle with edge nodes as boundary.
    pub fn rect(bounds: Bounds, nx: usize, ny: usize) -> Result<Self, GridError> {
        Self::from_predicate(bounds, nx, ny, Shape::Rect, |_, _| true)
    }

    /// `n x n` nodes on `[-1, 1]^2` with interior nodes `x^2 + y^2 < (1 - margin)^2`.
    pub fn disk(n: usize, margin: f64) -> Result<Self, GridError> {
        Self::disk_in(C64::new(0.0, 0.0), 1.0 - margin, Bounds::square(1.0), n, n)
    }

    /// Disk of `radius` about `center` on an explicit lattice.
    pub fn disk_in(
        center: C64,
        radius: f64,
        bounds: Bounds,
        nx: usize,
        ny: usize,
    ) -> Result<Self, GridError> {
        let r2 = radius * radius;
        Self::from_predicate(bounds, nx, ny, Shape::Disk { center, radius }, move |x, y| {
            let dx = x - center.re;
            let dy = y - center.im;
            dx * dx + dy * dy < r2
        })
    }

    /// Builds a grid from explicit node kinds. Kinds are re-derived so that the
    /// interior/boundary invariant holds: anything not marked interior becomes
    /// boundary or outside depending on adjacency.
    pub fn custom(
        bounds: Bounds,
        nx: usize,
        ny: usize,
        kinds: Vec<NodeKind>,
    ) -> Result<Self, GridError> {
        Self::check(bounds, nx, ny)?;
        assert_eq!(kinds.len(), nx * ny);
        let mut g = Grid {
            bounds,
            nx,
            ny,
            shape: Shape::Custom,
            kinds,
        };
        for j in 0..ny {
            for i in 0..nx {
                let on_edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                if on_edge && g.kinds[j * nx + i] == NodeKind::Interior {
                    g.kinds[j * nx + i] = NodeKind::Boundary;
                }
            }
        }
        g.mark_boundary();
        Ok(g)
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn hx(&self) -> f64 {
        (self.bounds.x1 - self.bounds.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.bounds.y1 - self.bounds.y0) / (self.ny - 1) as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Node coordinates. The last row/column land exactly on the upper bound.
    pub fn point(&self, i: usize, j: usize) -> C64 {
        let x = if i == self.nx - 1 {
            self.bounds.x1
        } else {
            self.bounds.x0 + i as f64 * self.hx()
        };
        let y = if j == self.ny - 1 {
            self.bounds.y1
        } else {
            self.bounds.y0 + j as f64 * self.hy()
        };
        C64::new(x, y)
    }

    pub fn point_at(&self, idx: usize) -> C64 {
        let (i, j) = self.ij(idx);
        self.point(i, j)
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn kind_at(&self, i: usize, j: usize) -> NodeKind {
        self.kinds[self.index(i, j)]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn in_mask(&self, idx: usize) -> bool {
        self.kinds[idx] != NodeKind::Outside
    }

    /// In-mask test that tolerates out-of-range indices.
    pub fn in_mask_ij(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.nx
            && (j as usize) < self.ny
            && self.kinds[j as usize * self.nx + i as usize] != NodeKind::Outside
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| self.kinds[k] == NodeKind::Interior)
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| self.kinds[k] == NodeKind::Boundary)
    }

    pub fn masked(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| self.kinds[k] != NodeKind::Outside)
    }

    pub fn interior_count(&self) -> usize {
        self.interior().count()
    }

    /// Doubles the number of cells in each direction. Coarse node `(i, j)`
    /// becomes fine node `(2i, 2j)`.
    pub fn refine(&self) -> Grid {
        let nx = 2 * (self.nx - 1) + 1;
        let ny = 2 * (self.ny - 1) + 1;
        let refined = match &self.shape {
            Shape::Rect => Grid::rect(self.bounds, nx, ny),
            Shape::Disk { center, radius } => {
                Grid::disk_in(*center, *radius, self.bounds, nx, ny)
            }
            Shape::Custom => {
                // a fine node is interior when every coarse node around it is interior
                let mut kinds = vec![NodeKind::Outside; nx * ny];
                for j in 0..ny {
                    for i in 0..nx {
                        let (ci0, ci1) = (i / 2, i.div_ceil(2));
                        let (cj0, cj1) = (j / 2, j.div_ceil(2));
                        let all = [(ci0, cj0), (ci1, cj0), (ci0, cj1), (ci1, cj1)]
                            .iter()
                            .all(|&(a, b)| self.kind_at(a, b) == NodeKind::Interior);
                        if all {
                            kinds[j * nx + i] = NodeKind::Interior;
                        }
                    }
                }
                Grid::custom(self.bounds, nx, ny, kinds)
            }
        };
        refined.expect("refinement of a valid grid is valid")
    }

    /// Interior nodes whose `(2k+1)^2` neighbourhood is entirely interior:
    /// a compact subset kept `k` grid steps away from the boundary.
    pub fn compact_submask(&self, steps: usize) -> Vec<bool> {
        let mut mask: Vec<bool> = self
            .kinds
            .iter()
            .map(|k| *k == NodeKind::Interior)
            .collect();
        for _ in 0..steps {
            let prev = mask.clone();
            for j in 0..self.ny {
                for i in 0..self.nx {
                    if !prev[j * self.nx + i] {
                        continue;
                    }
                    let keep = self
                        .neighbours8(i, j)
                        .all(|(a, b)| prev[b * self.nx + a]);
                    let on_edge = i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1;
                    mask[j * self.nx + i] = keep && !on_edge;
                }
            }
        }
        mask
    }

    /// Boundary nodes as a closed counter-clockwise loop. Rectangles walk the
    /// edges; other shapes sort boundary nodes by angle about their centroid.
    pub fn boundary_loop(&self) -> Vec<usize> {
        if self.shape == Shape::Rect {
            let (nx, ny) = (self.nx, self.ny);
            let mut out = Vec::with_capacity(2 * (nx + ny));
            out.extend((0..nx - 1).map(|i| self.index(i, 0)));
            out.extend((0..ny - 1).map(|j| self.index(nx - 1, j)));
            out.extend((1..nx).rev().map(|i| self.index(i, ny - 1)));
            out.extend((1..ny).rev().map(|j| self.index(0, j)));
            return out;
        }
        let nodes: Vec<usize> = self.boundary().collect();
        if nodes.is_empty() {
            return nodes;
        }
        let c = nodes.iter().map(|&k| self.point_at(k)).sum::<C64>() / nodes.len() as f64;
        let mut keyed: Vec<(f64, f64, usize)> = nodes
            .iter()
            .map(|&k| {
                let d = self.point_at(k) - c;
                (d.arg(), d.norm(), k)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        keyed.into_iter().map(|(_, _, k)| k).collect()
    }

    /// Index of the masked node nearest to `p`.
    pub fn nearest_node(&self, p: C64) -> Option<usize> {
        self.masked().min_by(|&a, &b| {
            let da = (self.point_at(a) - p).norm_sqr();
            let db = (self.point_at(b) - p).norm_sqr();
            da.total_cmp(&db).then(a.cmp(&b))
        })
    }

    pub fn same_lattice(&self, other: &Grid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.bounds == other.bounds && self.kinds == other.kinds
    }
}

pub type SharedGrid = Arc<Grid>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_small_is_rejected() {
        assert!(matches!(
            Grid::rect(Bounds::square(1.0), 2, 5),
            Err(GridError::TooSmall { .. })
        ));
    }

    #[test]
    fn disk_interior_rule() {
        let g = Grid::disk(33, 0.05).unwrap();
        for k in 0..g.len() {
            let p = g.point_at(k);
            let inside = p.norm_sqr() < 0.95 * 0.95;
            assert_eq!(g.kind(k) == NodeKind::Interior, inside, "node {p}");
        }
        for k in g.interior() {
            let (i, j) = g.ij(k);
            for (a, b) in g.neighbours8(i, j) {
                assert_ne!(g.kind_at(a, b), NodeKind::Outside);
            }
        }
    }

    #[test]
    fn refine_doubles_cells_and_embeds_nodes() {
        let g = Grid::rect(Bounds::square(1.0), 33, 33).unwrap();
        let f = g.refine();
        assert_eq!((f.nx(), f.ny()), (65, 65));
        for j in 0..33 {
            for i in 0..33 {
                assert_eq!(g.point(i, j), f.point(2 * i, 2 * j));
            }
        }
        let d = Grid::disk(33, 0.05).unwrap();
        let df = d.refine();
        for j in 0..33 {
            for i in 0..33 {
                assert_eq!(d.kind_at(i, j) == NodeKind::Interior, df.kind_at(2 * i, 2 * j) == NodeKind::Interior);
            }
        }
    }

    #[test]
    fn rect_loop_is_closed_ccw() {
        let g = Grid::rect(Bounds::square(1.0), 5, 4).unwrap();
        let lp = g.boundary_loop();
        assert_eq!(lp.len(), 2 * (5 - 1) + 2 * (4 - 1));
        let pts: Vec<C64> = lp.iter().map(|&k| g.point_at(k)).collect();
        let area: f64 = (0..pts.len())
            .map(|a| {
                let p = pts[a];
                let q = pts[(a + 1) % pts.len()];
                p.re * q.im - q.re * p.im
            })
            .sum::<f64>()
            / 2.0;
        assert!((area - 4.0).abs() < 1e-12);
    }

    #[test]
    fn compact_submask_shrinks() {
        let g = Grid::rect(Bounds::square(1.0), 11, 11).unwrap();
        let m = g.compact_submask(2);
        assert_eq!(m.iter().filter(|&&b| b).count(), 5 * 5);
    }
}
