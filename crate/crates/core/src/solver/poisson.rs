//! Dirichlet problems for the 5-point Laplacian on a masked grid, solved by a
//! banded Cholesky factorization of `−Δ_h` over the free nodes.

use std::sync::Arc;

use super::SolverError;
use crate::expr::C64;
use crate::grid::{Grid, GridField, NodeKind};

#[derive(Debug, Clone)]
pub struct Poisson {
    grid: Arc<Grid>,
    /// Unknown index of each node, `usize::MAX` for fixed nodes.
    slot: Vec<usize>,
    nodes: Vec<usize>,
    bw: usize,
    /// Row `i` holds `L(i, i − d)` at `i * (bw + 1) + d`.
    chol: Vec<f64>,
    cx: f64,
    cy: f64,
}

const FIXED: usize = usize::MAX;

impl Poisson {
    /// Factors `−Δ_h` over the interior nodes where `free` is set; every other
    /// masked node is Dirichlet data.
    pub fn new(grid: Arc<Grid>, free: &[bool]) -> Result<Self, SolverError> {
        let mut slot = vec![FIXED; grid.len()];
        let mut nodes = Vec::new();
        for k in 0..grid.len() {
            if free[k] && grid.kind(k) == NodeKind::Interior {
                slot[k] = nodes.len();
                nodes.push(k);
            }
        }
        let cx = 1.0 / (grid.hx() * grid.hx());
        let cy = 1.0 / (grid.hy() * grid.hy());
        let nx = grid.nx();
        let mut bw = 0;
        for (i, &k) in nodes.iter().enumerate() {
            for nb in [k + 1, k + nx] {
                if nb < grid.len() && slot[nb] != FIXED {
                    bw = bw.max(slot[nb] - i);
                }
            }
        }
        let n = nodes.len();
        let w = bw + 1;
        let mut chol = vec![0.0; n * w];
        // assemble the lower band of −Δ_h
        for (i, &k) in nodes.iter().enumerate() {
            chol[i * w] = 2.0 * (cx + cy);
            for (nb, c) in [(k.wrapping_sub(1), cx), (k.wrapping_sub(nx), cy)] {
                if nb < grid.len() && slot[nb] != FIXED {
                    chol[i * w + (i - slot[nb])] = -c;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = chol[i * w + (i - j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    s -= chol[i * w + (i - k)] * chol[j * w + (j - k)];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(SolverError::Factorization);
                    }
                    chol[i * w] = s.sqrt();
                } else {
                    chol[i * w + (i - j)] = s / chol[j * w];
                }
            }
        }
        Ok(Poisson {
            grid,
            slot,
            nodes,
            bw,
            chol,
            cx,
            cy,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_free(&self, k: usize) -> bool {
        self.slot[k] != FIXED
    }

    fn substitute(&self, b: &mut [f64]) {
        let w = self.bw + 1;
        let n = b.len();
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.chol[i * w + (i - k)] * b[k];
            }
            b[i] = s / self.chol[i * w];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n.min(i + self.bw + 1) {
                s -= self.chol[k * w + (k - i)] * b[k];
            }
            b[i] = s / self.chol[i * w];
        }
    }

    /// Solves `Δ_h u = rhs` at the free nodes, with `u` equal to `fixed` at
    /// every other masked node.
    pub fn solve(&self, fixed: &GridField, rhs: &[C64]) -> GridField {
        let g = &self.grid;
        let nx = g.nx();
        let n = self.nodes.len();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (i, &k) in self.nodes.iter().enumerate() {
            let mut b = -rhs[k];
            for (nb, c) in [(k - 1, self.cx), (k + 1, self.cx), (k - nx, self.cy), (k + nx, self.cy)] {
                if self.slot[nb] == FIXED {
                    b += fixed.get(nb) * c;
                }
            }
            re[i] = b.re;
            im[i] = b.im;
        }
        self.substitute(&mut re);
        self.substitute(&mut im);
        let mut out: Vec<C64> = fixed.values().to_vec();
        for (i, &k) in self.nodes.iter().enumerate() {
            out[k] = C64::new(re[i], im[i]);
        }
        GridField::new(g.clone(), out)
    }
}
