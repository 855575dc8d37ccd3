//! For constant weight a harmonic `h` is either quasiregular (`|μ| < 1`
//! throughout) or a fold `conj(ζ) u + c` with `u` real harmonic.

use super::{derive_sampled, AnalysisError, MU_FLOOR};
use crate::expr::C64;
use crate::grid::{laplacian, GridField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DichotomyCase {
    Quasiregular,
    Folded,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FoldFit {
    pub zeta: C64,
    pub c: C64,
    /// Largest `|Im(ζ (h − c))|`, the distance from `h` to the fold family.
    pub residual: f64,
    /// Largest discrete Laplacian of `u = Re(ζ (h − c))` on interior nodes.
    pub u_laplacian: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Dichotomy {
    pub case: DichotomyCase,
    /// `(margin steps, max |μ|)` over a shrinking exhaustion.
    pub exhaustion: Vec<(usize, f64)>,
    pub fold: Option<FoldFit>,
}

const ANGLES: usize = 720;
const FOLD_TOL: f64 = 1e-8;

fn off_axis(h: &GridField, mask: &[bool], c: C64, theta: f64) -> f64 {
    let z = C64::from_polar(1.0, theta);
    h.fold_where(mask, 0.0, |acc, v| acc + (z * (v - c)).im.powi(2))
}

fn fit_fold(h: &GridField) -> FoldFit {
    let g = h.grid();
    let mask: Vec<bool> = (0..g.len()).map(|k| g.in_mask(k)).collect();
    let mut n = 0usize;
    let sum = h.fold_where(&mask, C64::new(0.0, 0.0), |acc, v| {
        n += 1;
        acc + v
    });
    let c = sum / n.max(1) as f64;
    // ζ and −ζ give the same fold, so half a turn suffices
    let step = std::f64::consts::PI / ANGLES as f64;
    let mut best = (0.0, f64::INFINITY);
    for a in 0..ANGLES {
        let t = a as f64 * step;
        let r = off_axis(h, &mask, c, t);
        if r < best.1 {
            best = (t, r);
        }
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best.0 - step, best.0 + step);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (off_axis(h, &mask, c, x1), off_axis(h, &mask, c, x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = off_axis(h, &mask, c, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = off_axis(h, &mask, c, x2);
        }
    }
    let (t, _) = [(best.0, best.1), (x1, f1), (x2, f2)]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let zeta = C64::from_polar(1.0, t);
    let residual = h.fold_where(&mask, 0.0f64, |acc, v| acc.max((zeta * (v - c)).im.abs()));
    let u = h.map(|v| C64::new((zeta * (v - c)).re, 0.0));
    FoldFit {
        zeta,
        c,
        residual,
        u_laplacian: laplacian(&u).max_abs_interior(),
    }
}

/// Classifies a harmonic `h` for constant weight.
pub fn dichotomy_eta_const(h: &GridField) -> Result<Dichotomy, AnalysisError> {
    let g = h.grid().clone();
    let one = GridField::constant(g.clone(), C64::new(1.0, 0.0));
    let df = derive_sampled(h, &one, MU_FLOOR);
    let mut exhaustion = Vec::new();
    for steps in [1usize, 2, 4, 8] {
        let m = g.compact_submask(steps);
        if !m.iter().any(|b| *b) {
            break;
        }
        exhaustion.push((steps, df.mu.max_abs_where(&m)));
    }
    if exhaustion.is_empty() {
        return Err(AnalysisError::EmptyCompact);
    }
    // undefined μ (h_w = 0) counts as touching the fold branch
    let worst = exhaustion
        .iter()
        .map(|e| e.1)
        .fold(0.0, f64::max)
        .max(if df.undefined_mu > 0 { 1.0 } else { 0.0 });
    if worst < 1.0 - MU_FLOOR {
        return Ok(Dichotomy {
            case: DichotomyCase::Quasiregular,
            exhaustion,
            fold: None,
        });
    }
    let fit = fit_fold(h);
    let scale = h.max_abs_where(&(0..g.len()).map(|k| g.in_mask(k)).collect::<Vec<_>>());
    let case = if fit.residual <= FOLD_TOL * (1.0 + scale) {
        DichotomyCase::Folded
    } else {
        DichotomyCase::Inconclusive
    };
    Ok(Dichotomy {
        case,
        exhaustion,
        fold: Some(fit),
    })
}
