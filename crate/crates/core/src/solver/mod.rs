//! Solution producers: harmonic maps into conformal metrics, the weighted
//! Hopf equation with the weight on the domain, explicit shear solutions and
//! manufactured closed-form triples.
//!
//! Both elliptic solvers are lagged Picard iterations: the nonlinear source is
//! frozen at the current iterate, the linear Dirichlet problem for the 5-point
//! Laplacian is solved directly, and the update is damped.

mod manufactured;
mod poisson;
mod shear;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{ComplexExpr, ExprError, C64};
use crate::grid::{d_w, d_wbar, laplacian, ExecMode, Grid, GridError, GridField, NodeKind};
use crate::weight::{Weight, WeightError};

pub use manufactured::{make_manufactured, Family, Manufactured};
pub use poisson::Poisson;
pub use shear::{shear, ShearSolution};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("weight undefined at h = {at} during iteration {iteration}: {source}")]
    Domain {
        at: C64,
        iteration: usize,
        #[source]
        source: ExprError,
    },
    #[error("iteration diverged at step {iteration}: update {update:e} (best {best:e})")]
    Diverged {
        iteration: usize,
        update: f64,
        best: f64,
    },
    #[error("degenerate set covers {fraction:.3} of the interior (limit {limit})")]
    Degenerate { fraction: f64, limit: f64 },
    #[error("Laplacian factorization failed")]
    Factorization,
    #[error("weight drops below 1 at x = {x}: {value}")]
    BelowOne { x: f64, value: f64 },
    #[error("quadrature did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolveParams {
    /// Stop when the largest update falls below this...
    pub tol: f64,
    /// ...and the equation residual below this.
    pub residual_tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// Nodes with `|1 − |μ|| < mu_floor` are frozen by the flat solver.
    pub mu_floor: f64,
    pub max_degenerate_fraction: f64,
    pub mode: ExecMode,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            tol: 1e-10,
            residual_tol: 1e-8,
            damping: 0.7,
            max_iter: 50_000,
            mu_floor: 1e-3,
            max_degenerate_fraction: 0.2,
            mode: ExecMode::Seq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Norms {
    pub max: f64,
    /// Discrete `L²`: `sqrt(Σ |r|² hx hy)`.
    pub l2: f64,
}

impl Norms {
    pub fn of(f: &GridField, mask: &[bool]) -> Self {
        let g = f.grid();
        let cell = g.hx() * g.hy();
        let sq = f.fold_where(mask, 0.0, |acc, v| acc + v.norm_sqr());
        Norms {
            max: f.max_abs_where(mask),
            l2: (sq * cell).sqrt(),
        }
    }
}

pub const EPS_J: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Solution {
    pub h: GridField,
    /// Residual of the relaxed second-order equation on free interior nodes.
    pub tension_residual: Norms,
    /// `|h_w conj(h_w̄) η − Φ|` once a `Φ` has been supplied.
    pub hopf_residual: Option<Norms>,
    pub iterations: usize,
    pub converged: bool,
    pub last_update: f64,
    /// Interior nodes held fixed because `|μ|` came within the floor of 1.
    pub frozen: Vec<usize>,
    pub degenerate_fraction: f64,
    pub min_jacobian: f64,
    pub orientation_clean: bool,
    pub mode: ExecMode,
}

impl Solution {
    pub fn grid(&self) -> &Arc<Grid> {
        self.h.grid()
    }

    /// Boundary nodes with their prescribed values.
    pub fn boundary_trace(&self) -> Vec<(usize, C64)> {
        self.grid().boundary().map(|k| (k, self.h.get(k))).collect()
    }

    /// Records `|h_w conj(h_w̄) η − Φ|` on interior nodes.
    pub fn set_hopf_residual(&mut self, eta: &GridField, phi: &GridField) {
        let hw = d_w(&self.h);
        let hwb = d_wbar(&self.h);
        let g = self.grid().clone();
        let r = GridField::from_fn(g, |k, _| {
            hw.get(k) * hwb.get(k).conj() * eta.get(k) - phi.get(k)
        });
        self.hopf_residual = Some(Norms::of(&r, &r.interior_mask()));
    }

    /// Solution fields of two runs agree bit for bit.
    pub fn bit_eq(&self, other: &Solution) -> bool {
        self.h.bit_eq(&other.h)
    }
}

/// Boundary values of `trace` on a field that is zero at interior nodes.
pub fn boundary_field(trace: &ComplexExpr, g: &Arc<Grid>) -> Result<GridField, SolverError> {
    let mut vals = vec![C64::new(0.0, 0.0); g.len()];
    for k in g.boundary() {
        let p = g.point_at(k);
        vals[k] = trace.eval(p).map_err(|source| {
            let (i, j) = g.ij(k);
            GridError::Domain { i, j, at: p, source }
        })?;
    }
    Ok(GridField::new(g.clone(), vals))
}

/// Discrete harmonic extension of the boundary trace.
pub fn harmonic_extension(trace: &ComplexExpr, g: &Arc<Grid>) -> Result<GridField, SolverError> {
    let fixed = boundary_field(trace, g)?;
    let p = Poisson::new(g.clone(), &vec![true; g.len()])?;
    Ok(p.solve(&fixed, &vec![C64::new(0.0, 0.0); g.len()]))
}

/// Per-node source evaluation, parallel when asked. Output order is fixed,
/// so both modes give identical bits.
fn per_node<T: Send>(
    n: usize,
    mode: ExecMode,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    match mode {
        ExecMode::Seq => (0..n).map(f).collect(),
        ExecMode::Par => (0..n).into_par_iter().map(f).collect(),
    }
}

struct Relaxed {
    h: GridField,
    iterations: usize,
    converged: bool,
    last_update: f64,
    residual: Norms,
    free: Vec<bool>,
}

/// Lagged Picard iteration for `Δ_h h = S(h)`. `source` returns the source at
/// every node and may clear entries of `free` to freeze nodes.
fn relax(
    h0: GridField,
    params: &SolveParams,
    mut source: impl FnMut(&GridField, &mut [bool], usize) -> Result<Vec<C64>, SolverError>,
) -> Result<Relaxed, SolverError> {
    let g = h0.grid().clone();
    let mut free: Vec<bool> = g.kinds().iter().map(|k| *k == NodeKind::Interior).collect();
    let mut poisson = Poisson::new(g.clone(), &free)?;
    let mut h = h0;
    let mut best = f64::INFINITY;
    let mut last_update = f64::INFINITY;
    let mut residual = Norms::default();
    let theta = params.damping;
    for it in 0..params.max_iter {
        let before = free.clone();
        let rhs = source(&h, &mut free, it)?;
        if free != before {
            poisson = Poisson::new(g.clone(), &free)?;
        }
        let lap = laplacian(&h);
        let r = GridField::from_fn(g.clone(), |k, _| {
            if free[k] {
                lap.get(k) - rhs[k]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        residual = Norms::of(&r, &free);
        let target = poisson.solve(&h, &rhs);
        let mut update = 0.0f64;
        let mut next = h.values().to_vec();
        for k in 0..g.len() {
            if free[k] {
                let d = target.get(k) - h.get(k);
                update = update.max(d.norm());
                next[k] = h.get(k) + theta * d;
            }
        }
        if !update.is_finite() || (it > 5 && update > 10.0 * best) {
            return Err(SolverError::Diverged {
                iteration: it,
                update,
                best,
            });
        }
        best = best.min(update);
        last_update = update;
        if update <= params.tol && residual.max <= params.residual_tol {
            return Ok(Relaxed {
                h,
                iterations: it + 1,
                converged: true,
                last_update,
                residual,
                free,
            });
        }
        h = GridField::new(g.clone(), next);
    }
    Ok(Relaxed {
        h,
        iterations: params.max_iter,
        converged: false,
        last_update,
        residual,
        free,
    })
}

fn finish(r: Relaxed, params: &SolveParams) -> Solution {
    let g = r.h.grid().clone();
    let hw = d_w(&r.h);
    let hwb = d_wbar(&r.h);
    let min_jacobian = g
        .interior()
        .map(|k| hw.get(k).norm_sqr() - hwb.get(k).norm_sqr())
        .fold(f64::INFINITY, f64::min);
    let frozen: Vec<usize> = g.interior().filter(|&k| !r.free[k]).collect();
    let interior = g.interior_count().max(1);
    Solution {
        degenerate_fraction: frozen.len() as f64 / interior as f64,
        frozen,
        h: r.h,
        tension_residual: r.residual,
        hopf_residual: None,
        iterations: r.iterations,
        converged: r.converged,
        last_update: r.last_update,
        min_jacobian,
        orientation_clean: min_jacobian >= -EPS_J,
        mode: params.mode,
    }
}

fn initial_guess(
    trace: &ComplexExpr,
    g: &Arc<Grid>,
    init: Option<&GridField>,
) -> Result<GridField, SolverError> {
    let ext = harmonic_extension(trace, g)?;
    Ok(match init {
        None => ext,
        Some(f) => {
            if !f.grid().same_lattice(g) {
                return Err(GridError::Mismatch.into());
            }
            GridField::from_fn(g.clone(), |k, _| {
                if g.kind(k) == NodeKind::Interior {
                    f.get(k)
                } else {
                    ext.get(k)
                }
            })
        }
    })
}

/// Harmonic map into the metric `α(u)|du|²` with Dirichlet data `trace`:
/// relaxes `h_ww̄ + (log α)_u(h) h_w h_w̄ = 0`, i.e. `Δh = −4 (α_u/α)(h) h_w h_w̄`.
pub fn solve_tension(
    alpha: &Weight,
    trace: &ComplexExpr,
    g: &Arc<Grid>,
    params: &SolveParams,
) -> Result<Solution, SolverError> {
    solve_tension_from(alpha, trace, g, params, None)
}

pub fn solve_tension_from(
    alpha: &Weight,
    trace: &ComplexExpr,
    g: &Arc<Grid>,
    params: &SolveParams,
    init: Option<&GridField>,
) -> Result<Solution, SolverError> {
    let h0 = initial_guess(trace, g, init)?;
    let log_u = alpha.eta_w.div(&alpha.eta);
    let flat = log_u.as_const() == Some(C64::new(0.0, 0.0));
    let r = relax(h0, params, |h, free, it| {
        if flat {
            return Ok(vec![C64::new(0.0, 0.0); h.grid().len()]);
        }
        let hw = d_w(h);
        let hwb = d_wbar(h);
        let vals = per_node(h.grid().len(), params.mode, |k| {
            if !free[k] {
                return Ok(C64::new(0.0, 0.0));
            }
            let at = h.get(k);
            let l = log_u.eval(at).map_err(|source| SolverError::Domain {
                at,
                iteration: it,
                source,
            })?;
            Ok(-4.0 * l * hw.get(k) * hwb.get(k))
        });
        vals.into_iter().collect()
    })?;
    Ok(finish(r, params))
}

/// The weighted Hopf equation with the weight on the domain. A solution makes
/// `h_w conj(h_w̄) η` holomorphic, which for `|μ| ≠ 1` is the second-order
/// equation `h_ww̄ = (|μ|² h_w η_w̄ − h_w̄ η_w) / (η (1 − |μ|²))`. When
/// `Φ ≡ 1` the coefficient reduces to
/// `(h_w̄/2)(−η_x/((1+μ)η) + i η_y/((1−μ)η))`.
pub fn solve_hopf_flat(
    eta: &Weight,
    trace: &ComplexExpr,
    g: &Arc<Grid>,
    params: &SolveParams,
) -> Result<Solution, SolverError> {
    solve_hopf_flat_from(eta, trace, g, params, None)
}

pub fn solve_hopf_flat_from(
    eta: &Weight,
    trace: &ComplexExpr,
    g: &Arc<Grid>,
    params: &SolveParams,
    init: Option<&GridField>,
) -> Result<Solution, SolverError> {
    let h0 = initial_guess(trace, g, init)?;
    let e = eta.sample(g)?;
    let ew = eta.sample_w(g)?;
    let interior = g.interior_count().max(1) as f64;
    let flat = eta.is_constant();
    let r = relax(h0, params, |h, free, _| {
        if flat {
            return Ok(vec![C64::new(0.0, 0.0); h.grid().len()]);
        }
        let hw = d_w(h);
        let hwb = d_wbar(h);
        let mut frozen = 0usize;
        for k in 0..free.len() {
            if free[k] {
                let a = hw.get(k).norm();
                let mu = if a > 1e-12 { hwb.get(k).norm() / a } else { f64::INFINITY };
                if (1.0 - mu).abs() < params.mu_floor || !mu.is_finite() {
                    free[k] = false;
                }
            }
            if g.kind(k) == NodeKind::Interior && !free[k] {
                frozen += 1;
            }
        }
        let fraction = frozen as f64 / interior;
        if fraction > params.max_degenerate_fraction {
            return Err(SolverError::Degenerate {
                fraction,
                limit: params.max_degenerate_fraction,
            });
        }
        Ok(per_node(h.grid().len(), params.mode, |k| {
            if !free[k] {
                return C64::new(0.0, 0.0);
            }
            let (a, b) = (hw.get(k), hwb.get(k));
            let m2 = b.norm_sqr() / a.norm_sqr();
            let q = (m2 * a * ew.get(k).conj() - b * ew.get(k)) / (e.get(k).re * (1.0 - m2));
            4.0 * q
        }))
    })?;
    Ok(finish(r, params))
}
