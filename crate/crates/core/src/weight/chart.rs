//! Single-valued `√Φ` on convex zero-free regions and the natural coordinate
//! `z = ψ(w) = ∫_{w0}^{w} √Φ`, with inverse `φ = ψ⁻¹` satisfying
//! `φ'(z)² Φ(φ(z)) = 1`.
//!
//! Both supported regions are convex, so the straight segment between two
//! region points never leaves the region and paths need no splitting.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use super::holo::{find_zeros, HoloData};
use super::quad::{nodes, rules};
use super::{Weight, WeightError};
use crate::expr::C64;
use crate::grid::{Bounds, Grid, GridField};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Region {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { center: C64, radius: f64 },
}

impl Region {
    pub fn contains(&self, p: C64) -> bool {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => p.re >= x0 && p.re <= x1 && p.im >= y0 && p.im <= y1,
            Region::Disk { center, radius } => (p - center).norm() <= radius,
        }
    }

    pub fn bounds(&self) -> Bounds {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => Bounds::new(x0, x1, y0, y1),
            Region::Disk { center, radius } => Bounds::new(
                center.re - radius,
                center.re + radius,
                center.im - radius,
                center.im + radius,
            ),
        }
    }

    pub fn centre(&self) -> C64 {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => C64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1)),
            Region::Disk { center, .. } => center,
        }
    }

    /// Distance from an interior point to the region boundary.
    pub fn inradius(&self, p: C64) -> f64 {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => {
                (p.re - x0).min(x1 - p.re).min(p.im - y0).min(y1 - p.im)
            }
            Region::Disk { center, radius } => radius - (p - center).norm(),
        }
    }

    fn scale(&self) -> f64 {
        let b = self.bounds();
        (b.x1 - b.x0).max(b.y1 - b.y0)
    }

    /// Points of an `n x n` lattice over the bounding box that lie in the region.
    fn lattice(&self, n: usize) -> Vec<(usize, usize, C64)> {
        let b = self.bounds();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let p = C64::new(
                    b.x0 + (b.x1 - b.x0) * i as f64 / (n - 1) as f64,
                    b.y0 + (b.y1 - b.y0) * j as f64 / (n - 1) as f64,
                );
                if self.contains(p) {
                    out.push((i, j, p));
                }
            }
        }
        out
    }
}

fn nearest_sign(v: C64, reference: C64) -> C64 {
    if (v - reference).norm() <= (-v - reference).norm() {
        v
    } else {
        -v
    }
}

fn aligned(reference: C64, v: C64) -> bool {
    (v / reference).arg().abs() < PI / 3.0
}

/// A continuous choice of `√Φ` on a region, fixed by its value at `w0`.
#[derive(Debug, Clone)]
pub struct SqrtBranch {
    pub phi: HoloData,
    pub region: Region,
    pub w0: C64,
    pub b0: C64,
    /// Largest `|b(p) − b(q)| / |b(p)|` over edges of the certification lattice.
    pub max_jump: f64,
}

impl SqrtBranch {
    fn principal(&self, w: C64) -> Result<C64, WeightError> {
        let v = self.phi.eval(w)?;
        if v.norm() == 0.0 {
            return Err(WeightError::TouchesZero { zero: w });
        }
        Ok(v.sqrt())
    }

    /// Continues the branch value `ba` at `a` along the segment to `b`.
    pub fn continue_to(&self, a: C64, b: C64, ba: C64) -> Result<C64, WeightError> {
        let mut cur = ba;
        let mut stack = vec![(0.0f64, 1.0f64)];
        let mut depth_guard = 0usize;
        while let Some((lo, hi)) = stack.pop() {
            let p = a + (b - a) * hi;
            let v = nearest_sign(self.principal(p)?, cur);
            if aligned(cur, v) {
                cur = v;
                continue;
            }
            depth_guard += 1;
            if hi - lo < 1e-12 || depth_guard > 100_000 {
                return Err(WeightError::Discontinuity { a, b });
            }
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
        Ok(cur)
    }

    pub fn eval(&self, w: C64) -> Result<C64, WeightError> {
        if !self.region.contains(w) {
            return Err(WeightError::OutsideRegion { at: w });
        }
        self.continue_to(self.w0, w, self.b0)
    }

    /// `(∫_a^b √Φ dζ, branch at b)` along the straight segment, given the
    /// branch value at `a`. Adaptive G7K15; a piece is also split when the
    /// branch turns too fast between consecutive nodes.
    pub fn integrate(&self, a: C64, b: C64, ba: C64) -> Result<(C64, C64), WeightError> {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return Ok((C64::new(0.0, 0.0), ba));
        }
        let t = nodes();
        let mut cur = ba;
        let mut total = C64::new(0.0, 0.0);
        let mut stack = vec![(0.0f64, 1.0f64)];
        while let Some((lo, hi)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let mut fv = [C64::new(0.0, 0.0); 15];
            let mut prev = cur;
            let mut ok = true;
            for (v, s) in fv.iter_mut().zip(t) {
                let q = nearest_sign(self.principal(a + d * (mid + half * s))?, prev);
                ok &= aligned(prev, q);
                prev = q;
                *v = q;
            }
            let end = nearest_sign(self.principal(a + d * hi)?, prev);
            ok &= aligned(prev, end);
            let (k, g) = rules(&fv);
            let (k, g) = (k * d * half, g * d * half);
            let err = (k - g).norm();
            let accept = ok && err <= 1e-15 * k.norm() + 1e-14 * len * (hi - lo) * cur.norm();
            if accept || (ok && err == 0.0) {
                total += k;
                cur = end;
            } else if hi - lo < 1e-10 {
                return Err(WeightError::Quadrature {
                    a: a + d * lo,
                    b: a + d * hi,
                });
            } else {
                stack.push((mid, hi));
                stack.push((lo, mid));
            }
        }
        Ok((total, cur))
    }
}

/// Builds the branch of `√Φ` on `region` with `b(w0) = sign · principal √Φ(w0)`
/// and certifies continuity on a 33 x 33 lattice.
pub fn sqrt_branch(
    phi: &HoloData,
    region: Region,
    w0: C64,
    sign: f64,
) -> Result<SqrtBranch, WeightError> {
    if !region.contains(w0) {
        return Err(WeightError::OutsideRegion { at: w0 });
    }
    let pad = 1e-9 * region.scale();
    let mut b = region.bounds();
    b.x0 -= pad;
    b.x1 += pad;
    b.y0 -= pad;
    b.y1 += pad;
    let zeros = match find_zeros(phi, b) {
        Ok(z) => z,
        Err(WeightError::ZeroOnContour { at }) => return Err(WeightError::TouchesZero { zero: at }),
        Err(e) => return Err(e),
    };
    for z in &zeros {
        let near = match region {
            Region::Rect { .. } => true,
            Region::Disk { center, radius } => (z.at - center).norm() <= radius + pad,
        };
        if near {
            return Err(WeightError::TouchesZero { zero: z.at });
        }
    }
    let v0 = phi.eval(w0)?;
    let mut branch = SqrtBranch {
        phi: phi.clone(),
        region,
        w0,
        b0: v0.sqrt() * sign.signum(),
        max_jump: 0.0,
    };
    let n = 33;
    let pts = region.lattice(n);
    let mut vals = vec![None; n * n];
    for &(i, j, p) in &pts {
        vals[j * n + i] = Some((p, branch.eval(p)?));
    }
    let mut max_jump = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let Some((p, bp)) = vals[j * n + i] else { continue };
            for (a, c) in [(i + 1, j), (i, j + 1)] {
                if a >= n || c >= n {
                    continue;
                }
                if let Some((q, bq)) = vals[c * n + a] {
                    let jump = (bp - bq).norm() / bp.norm();
                    if jump > 1.0 {
                        return Err(WeightError::Discontinuity { a: p, b: q });
                    }
                    max_jump = max_jump.max(jump);
                }
            }
        }
    }
    branch.max_jump = max_jump;
    Ok(branch)
}

#[derive(Debug, Clone, Copy)]
pub struct ChartOptions {
    /// Nodes per side of the `z` lattice.
    pub n: usize,
    /// Step for the finite-difference `φ'` used in the residual.
    pub fd_step: f64,
    pub sign: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            n: 65,
            fd_step: 1e-4,
            sign: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Solved {
    w: C64,
    psi: C64,
    b: C64,
}

#[derive(Debug, Clone)]
pub struct NaturalChart {
    pub branch: SqrtBranch,
    /// Square `[-s, s]^2` lattice in the `z` plane.
    pub grid: Arc<Grid>,
    pub half_size: f64,
    /// `φ(z)` at lattice nodes.
    pub phi_of_z: GridField,
    /// Finite-difference `φ'(z)`.
    pub dphi: GridField,
    /// `√Φ(φ(z))` on the chosen branch.
    pub sqrt_at: GridField,
    pub residual_max: f64,
    pub residual_rms: f64,
    /// Largest `|ψ'(w) − √Φ(w)| / |√Φ(w)|` by central differences.
    pub psi_derivative_error: f64,
    /// Largest `|∮ √Φ|` over the closed test loops.
    pub loop_closure: f64,
    /// Largest `|φ(ψ(w)) − w|` over region test points.
    pub inverse_error: f64,
}

impl NaturalChart {
    pub fn w0(&self) -> C64 {
        self.branch.w0
    }

    pub fn region(&self) -> Region {
        self.branch.region
    }

    /// `ψ(w)` along the straight segment from the basepoint.
    pub fn psi(&self, w: C64) -> Result<C64, WeightError> {
        if !self.region().contains(w) {
            return Err(WeightError::OutsideRegion { at: w });
        }
        Ok(self.branch.integrate(self.branch.w0, w, self.branch.b0)?.0)
    }

    fn solve_from(&self, z: C64, start: Solved) -> Result<Solved, WeightError> {
        let region = self.branch.region;
        solve_inverse(&self.branch, region, z, start)
    }

    /// `φ(z)` by Newton from the basepoint.
    pub fn phi(&self, z: C64) -> Result<C64, WeightError> {
        let start = Solved {
            w: self.branch.w0,
            psi: C64::new(0.0, 0.0),
            b: self.branch.b0,
        };
        Ok(self.solve_from(z, start)?.w)
    }

    pub fn dump(&self) -> ChartDump {
        let g = &self.grid;
        ChartDump {
            region: self.region(),
            basepoint: self.w0(),
            branch_at_basepoint: self.branch.b0,
            half_size: self.half_size,
            nodes_per_side: g.nx(),
            residual_max: self.residual_max,
            residual_rms: self.residual_rms,
            psi_derivative_error: self.psi_derivative_error,
            loop_closure: self.loop_closure,
            inverse_error: self.inverse_error,
            table: g
                .masked()
                .map(|k| ChartRow {
                    z: g.point_at(k),
                    phi: self.phi_of_z.get(k),
                    dphi: self.dphi.get(k),
                })
                .collect(),
        }
    }
}

fn solve_inverse(
    branch: &SqrtBranch,
    region: Region,
    z: C64,
    start: Solved,
) -> Result<Solved, WeightError> {
    let mut s = start;
    for _ in 0..60 {
        let r = z - s.psi;
        if r.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Ok(s);
        }
        let dw = r / s.b;
        let mut t = 1.0;
        let cand = loop {
            let c = s.w + dw * t;
            if region.contains(c) {
                break c;
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(WeightError::LeftRegion { z });
            }
        };
        let (inc, bc) = branch.integrate(s.w, cand, s.b)?;
        s = Solved {
            w: cand,
            psi: s.psi + inc,
            b: bc,
        };
        if (dw * t).norm() <= 1e-15 * (1.0 + s.w.norm()) {
            return Ok(s);
        }
    }
    if (z - s.psi).norm() <= 1e-12 * (1.0 + z.norm()) {
        Ok(s)
    } else {
        Err(WeightError::LeftRegion { z })
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ChartRow {
    pub z: C64,
    pub phi: C64,
    pub dphi: C64,
}

/// JSON form of a chart: region, basepoint, residual statistics and the
/// sampled `(z, φ(z), φ'(z))` table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChartDump {
    pub region: Region,
    pub basepoint: C64,
    pub branch_at_basepoint: C64,
    pub half_size: f64,
    pub nodes_per_side: usize,
    pub residual_max: f64,
    pub residual_rms: f64,
    pub psi_derivative_error: f64,
    pub loop_closure: f64,
    pub inverse_error: f64,
    pub table: Vec<ChartRow>,
}

struct Lattice {
    grid: Arc<Grid>,
    solved: Vec<Solved>,
    dphi: Vec<C64>,
}

fn build_lattice(
    branch: &SqrtBranch,
    s: f64,
    opts: &ChartOptions,
) -> Result<Lattice, WeightError> {
    let n = opts.n;
    let grid = Arc::new(Grid::rect(Bounds::square(s), n, n)?);
    let region = branch.region;
    let origin = Solved {
        w: branch.w0,
        psi: C64::new(0.0, 0.0),
        b: branch.b0,
    };
    let mut solved: Vec<Option<Solved>> = vec![None; n * n];
    let c = n / 2;
    let mut queue = VecDeque::new();
    solved[grid.index(c, c)] = Some(solve_inverse(branch, region, grid.point(c, c), origin)?);
    queue.push_back((c, c));
    while let Some((i, j)) = queue.pop_front() {
        let seed = solved[grid.index(i, j)].expect("queued nodes are solved");
        let nbrs = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        for (a, b) in nbrs {
            if a >= n || b >= n || solved[grid.index(a, b)].is_some() {
                continue;
            }
            solved[grid.index(a, b)] = Some(solve_inverse(branch, region, grid.point(a, b), seed)?);
            queue.push_back((a, b));
        }
    }
    let solved: Vec<Solved> = solved.into_iter().map(|s| s.expect("lattice is connected")).collect();
    let h = opts.fd_step;
    let mut dphi = Vec::with_capacity(n * n);
    for (k, sk) in solved.iter().enumerate() {
        let z = grid.point_at(k);
        let at = |d: C64| solve_inverse(branch, region, z + d, *sk).map(|r| r.w);
        let fx = at(C64::new(h, 0.0))? - at(C64::new(-h, 0.0))?;
        let fy = at(C64::new(0.0, h))? - at(C64::new(0.0, -h))?;
        // ∂_z φ = (φ_x − i φ_y)/2
        dphi.push((fx - C64::new(0.0, 1.0) * fy) / (4.0 * h));
    }
    Ok(Lattice { grid, solved, dphi })
}

/// Builds the natural coordinate on `region` around `w0`. The `z` lattice is
/// a square centred at 0, shrunk until every inverse solve stays inside the
/// region.
pub fn natural_chart(
    phi: &HoloData,
    region: Region,
    w0: C64,
    opts: ChartOptions,
) -> Result<NaturalChart, WeightError> {
    let branch = sqrt_branch(phi, region, w0, opts.sign)?;
    let rho = region.inradius(w0);
    let mut s = 0.8 * rho * branch.b0.norm() / std::f64::consts::SQRT_2;
    let mut attempt = 0;
    let lattice = loop {
        match build_lattice(&branch, s, &opts) {
            Ok(l) => break l,
            Err(WeightError::LeftRegion { .. }) if attempt < 12 => {
                s *= 0.8;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    };
    let g = lattice.grid.clone();
    let phi_of_z = GridField::from_fn(g.clone(), |k, _| lattice.solved[k].w);
    let sqrt_at = GridField::from_fn(g.clone(), |k, _| lattice.solved[k].b);
    let dphi = GridField::from_fn(g.clone(), |k, _| lattice.dphi[k]);
    let mut res_max = 0.0f64;
    let mut res_sq = 0.0;
    for k in 0..g.len() {
        let w = lattice.solved[k].w;
        let r = (lattice.dphi[k].powi(2) * phi.eval(w)? - 1.0).norm();
        res_max = res_max.max(r);
        res_sq += r * r;
    }
    let residual_rms = (res_sq / g.len() as f64).sqrt();

    let mut chart = NaturalChart {
        branch,
        grid: g,
        half_size: s,
        phi_of_z,
        dphi,
        sqrt_at,
        residual_max: res_max,
        residual_rms,
        psi_derivative_error: 0.0,
        loop_closure: 0.0,
        inverse_error: 0.0,
    };
    chart.psi_derivative_error = psi_derivative_check(&chart)?;
    chart.loop_closure = loop_closure(&chart.branch)?;
    chart.inverse_error = inverse_check(&chart, &lattice.solved)?;
    Ok(chart)
}

fn test_points(region: Region, w0: C64) -> Vec<C64> {
    let r = 0.6 * region.inradius(w0);
    (0..8)
        .map(|k| w0 + C64::from_polar(r * (0.3 + 0.1 * k as f64), 0.7 + 0.8 * k as f64))
        .collect()
}

fn psi_derivative_check(chart: &NaturalChart) -> Result<f64, WeightError> {
    let h = 1e-4;
    let mut worst = 0.0f64;
    for w in test_points(chart.region(), chart.w0()) {
        let d = (chart.psi(w + h)? - chart.psi(w - h)?) / (2.0 * h);
        let b = chart.branch.eval(w)?;
        worst = worst.max((d - b).norm() / b.norm());
    }
    Ok(worst)
}

fn loop_closure(branch: &SqrtBranch) -> Result<f64, WeightError> {
    let w0 = branch.w0;
    let r = 0.7 * branch.region.inradius(w0);
    let polygon: Vec<C64> = (0..12)
        .map(|k| w0 + C64::from_polar(r, PI * k as f64 / 6.0 + 0.1))
        .collect();
    let triangle = vec![
        w0 + C64::from_polar(0.5 * r, 0.3),
        w0 + C64::from_polar(0.9 * r, 2.2),
        w0 + C64::from_polar(0.4 * r, 4.0),
    ];
    let mut worst = 0.0f64;
    for lp in [polygon, triangle] {
        let mut b = branch.eval(lp[0])?;
        let start = b;
        let mut sum = C64::new(0.0, 0.0);
        for k in 0..lp.len() {
            let (inc, bn) = branch.integrate(lp[k], lp[(k + 1) % lp.len()], b)?;
            sum += inc;
            b = bn;
        }
        if (b - start).norm() > 1e-8 * start.norm() {
            return Err(WeightError::Discontinuity { a: lp[0], b: lp[0] });
        }
        worst = worst.max(sum.norm());
    }
    Ok(worst)
}

fn inverse_check(chart: &NaturalChart, solved: &[Solved]) -> Result<f64, WeightError> {
    let g = &chart.grid;
    let s = chart.half_size;
    let mut worst = 0.0f64;
    for w in test_points(chart.region(), chart.w0()) {
        let z = chart.psi(w)?;
        if z.re.abs() > s || z.im.abs() > s {
            continue;
        }
        let i = (((z.re + s) / g.hx()).round() as usize).min(g.nx() - 1);
        let j = (((z.im + s) / g.hy()).round() as usize).min(g.ny() - 1);
        let back = chart.solve_from(z, solved[g.index(i, j)])?;
        worst = worst.max((back.w - w).norm());
    }
    Ok(worst)
}

/// `η(z) = η̂(φ(z))` on the chart lattice with finite-difference derivatives
/// and the chain-rule prediction `η_y(z) = −2 Im(η̂_w / √Φ)(φ(z))`.
#[derive(Debug, Clone)]
pub struct PullbackWeight {
    pub grid: Arc<Grid>,
    pub eta: GridField,
    pub eta_x: GridField,
    pub eta_y: GridField,
    pub chain_x: GridField,
    pub chain_y: GridField,
    /// Max over interior nodes of `|η_y − chain_y|`.
    pub chain_residual: f64,
}

pub fn pullback_weight(eta_hat: &Weight, chart: &NaturalChart) -> Result<PullbackWeight, WeightError> {
    let g = chart.grid.clone();
    let mut eta = Vec::with_capacity(g.len());
    let mut cx = Vec::with_capacity(g.len());
    let mut cy = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let w = chart.phi_of_z.get(k);
        eta.push(C64::new(eta_hat.eval(w)?, 0.0));
        // η_z = η̂_w(φ) φ' with φ' = 1/√Φ(φ)
        let ez = eta_hat.eta_w.eval(w)? / chart.sqrt_at.get(k);
        cx.push(C64::new(2.0 * ez.re, 0.0));
        cy.push(C64::new(-2.0 * ez.im, 0.0));
    }
    let eta = GridField::new(g.clone(), eta);
    let chain_x = GridField::new(g.clone(), cx);
    let chain_y = GridField::new(g.clone(), cy);
    let eta_x = crate::grid::d_x(&eta);
    let eta_y = crate::grid::d_y(&eta);
    let diff = eta_y.zip(&chain_y, |a, b| a - b)?;
    let chain_residual = diff.max_abs_interior();
    Ok(PullbackWeight {
        grid: g,
        eta,
        eta_x,
        eta_y,
        chain_x,
        chain_y,
        chain_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weight::{make_weight, WeightSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn holo(text: &str) -> HoloData {
        HoloData::parse(text, &[c(2.1, 0.2)]).unwrap()
    }

    #[test]
    fn constant_branch() {
        let b = sqrt_branch(&holo("1"), Region::Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 }, c(0.0, 0.0), 1.0)
            .unwrap();
        assert_eq!(b.eval(c(0.7, -0.3)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn square_branch_is_identity_on_right_half_plane() {
        let region = Region::Rect { x0: 0.1, x1: 2.0, y0: -1.5, y1: 1.5 };
        let b = sqrt_branch(&holo("w^2"), region, c(1.0, 0.0), 1.0).unwrap();
        for w in [c(0.2, 1.4), c(1.9, -1.2), c(0.5, 0.0)] {
            assert!((b.eval(w).unwrap() - w).norm() < 1e-14);
        }
        let neg = sqrt_branch(&holo("w^2"), region, c(1.0, 0.0), -1.0).unwrap();
        assert!((neg.eval(c(0.2, 1.4)).unwrap() + c(0.2, 1.4)).norm() < 1e-14);
    }

    #[test]
    fn principal_branch_away_from_negative_axis() {
        let region = Region::Disk { center: c(2.0, 0.0), radius: 1.0 };
        let b = sqrt_branch(&holo("w"), region, c(2.0, 0.0), 1.0).unwrap();
        assert!((b.b0 - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        for (_, _, p) in region.lattice(21) {
            assert!((b.eval(p).unwrap() - p.sqrt()).norm() < 1e-12);
        }
    }

    #[test]
    fn region_touching_a_zero_is_rejected() {
        let region = Region::Disk { center: c(0.5, 0.0), radius: 0.6 };
        assert!(matches!(
            sqrt_branch(&holo("w"), region, c(0.5, 0.0), 1.0),
            Err(WeightError::TouchesZero { .. })
        ));
    }

    #[test]
    fn constant_data_gives_affine_chart() {
        let cst = c(0.0, 2.0);
        let phi = HoloData::constant(cst * cst);
        let region = Region::Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        let w0 = c(0.1, 0.2);
        let ch = natural_chart(&phi, region, w0, ChartOptions { n: 17, ..Default::default() }).unwrap();
        let b0 = ch.branch.b0;
        for k in ch.grid.masked() {
            let z = ch.grid.point_at(k);
            assert!((ch.phi_of_z.get(k) - (w0 + z / b0)).norm() < 1e-13);
        }
        assert!(ch.residual_max < 1e-8);
        assert!((ch.psi(c(0.5, 0.5)).unwrap() - b0 * (c(0.5, 0.5) - w0)).norm() < 1e-14);
    }

    #[test]
    fn sqrt_w_chart_matches_closed_form() {
        let region = Region::Disk { center: c(2.0, 0.0), radius: 0.5 };
        let w0 = c(2.0, 0.0);
        let ch = natural_chart(&holo("w"), region, w0, ChartOptions::default()).unwrap();
        let psi = |w: C64| (w.powf(1.5) - w0.powf(1.5)) * (2.0 / 3.0);
        for w in [c(2.3, 0.1), c(1.7, -0.3), c(2.0, 0.45)] {
            assert!((ch.psi(w).unwrap() - psi(w)).norm() < 1e-13);
        }
        assert!(ch.residual_max < 1e-6, "{}", ch.residual_max);
        assert!(ch.loop_closure < 1e-10, "{}", ch.loop_closure);
        assert!(ch.inverse_error < 1e-8);
        assert!(ch.psi_derivative_error < 1e-8, "{}", ch.psi_derivative_error);
    }

    #[test]
    fn pullback_of_flat_weight_and_translation() {
        let region = Region::Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        let w0 = c(0.1, -0.1);
        let ch = natural_chart(&HoloData::constant(c(1.0, 0.0)), region, w0, ChartOptions { n: 17, ..Default::default() })
            .unwrap();
        let one = make_weight(&WeightSpec::Constant(1.0)).unwrap();
        let pb = pullback_weight(&one, &ch).unwrap();
        assert_eq!(pb.eta.max_abs_where(&vec![true; pb.grid.len()]), 1.0);
        assert_eq!(pb.eta_y.max_abs_where(&vec![true; pb.grid.len()]), 0.0);
        let hat = make_weight(&WeightSpec::Custom("1 + abs(w)^2".into())).unwrap();
        let pb = pullback_weight(&hat, &ch).unwrap();
        for k in pb.grid.masked() {
            let z = pb.grid.point_at(k);
            assert!((pb.eta.get(k).re - hat.eval(w0 + z).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn chain_identity_on_sqrt_chart() {
        let region = Region::Disk { center: c(2.0, 0.0), radius: 0.5 };
        let opts = ChartOptions { n: 129, ..Default::default() };
        let ch = natural_chart(&holo("w"), region, c(2.0, 0.0), opts).unwrap();
        let hat = make_weight(&WeightSpec::Custom("1 + abs(w)^2".into())).unwrap();
        let pb = pullback_weight(&hat, &ch).unwrap();
        assert!(pb.chain_residual < 1e-5, "{}", pb.chain_residual);
    }
}
