use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use super::roots::{poly_eval, poly_roots};
use super::WeightError;
use crate::expr::{ComplexExpr, ExprError, C64};
use crate::grid::{Bounds, Grid, GridError, GridField};

/// A zero of `Φ` with its argument-principle multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Zero {
    pub at: C64,
    pub multiplicity: usize,
}

/// Holomorphic data `Φ`, its derivative, zeros located so far and the
/// holomorphy certificate `max |∂_w̄ Φ|` over the validation points.
#[derive(Debug, Clone)]
pub struct HoloData {
    pub phi: ComplexExpr,
    pub dphi: ComplexExpr,
    pub zeros: Vec<Zero>,
    pub certificate: f64,
}

const HOLO_TOL: f64 = 1e-10;

impl HoloData {
    pub fn new(phi: ComplexExpr, validation: &[C64]) -> Result<Self, WeightError> {
        let dbar = phi.d_wbar();
        let certificate = validation
            .iter()
            .filter_map(|&p| dbar.eval(p).ok())
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if certificate > HOLO_TOL {
            return Err(WeightError::NotHolomorphic { max: certificate });
        }
        Ok(HoloData {
            dphi: phi.d_w(),
            phi,
            zeros: Vec::new(),
            certificate,
        })
    }

    pub fn parse(text: &str, validation: &[C64]) -> Result<Self, WeightError> {
        Self::new(ComplexExpr::parse(text)?, validation)
    }

    /// Validates on the masked nodes of `g`.
    pub fn on_grid(phi: ComplexExpr, g: &Grid) -> Result<Self, WeightError> {
        let pts: Vec<C64> = g.masked().map(|k| g.point_at(k)).collect();
        Self::new(phi, &pts)
    }

    pub fn constant(c: C64) -> Self {
        Self::new(ComplexExpr::constant(c), &[]).expect("constants are holomorphic")
    }

    /// Locates the zeros inside `region` and stores them.
    pub fn with_zeros(mut self, region: Bounds) -> Result<Self, WeightError> {
        self.zeros = find_zeros(&self, region)?;
        Ok(self)
    }

    pub fn eval(&self, w: C64) -> Result<C64, ExprError> {
        self.phi.eval(w)
    }

    pub fn sample(&self, g: &Arc<Grid>) -> Result<GridField, GridError> {
        GridField::sample(&self.phi, g)
    }
}

fn corners(b: &Bounds) -> [C64; 4] {
    [
        C64::new(b.x0, b.y0),
        C64::new(b.x1, b.y0),
        C64::new(b.x1, b.y1),
        C64::new(b.x0, b.y1),
    ]
}

/// Argument increment of `f` along the segment `a → b`, refined until every
/// piece turns by less than a twelfth of a revolution.
fn arg_increment(
    f: &impl Fn(C64) -> Result<C64, ExprError>,
    a: C64,
    b: C64,
    fa: C64,
    fb: C64,
    tiny: f64,
    depth: usize,
) -> Result<f64, WeightError> {
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    if fm.norm() <= tiny {
        return Err(WeightError::ZeroOnContour { at: m });
    }
    let d1 = (fm / fa).arg();
    let d2 = (fb / fm).arg();
    if d1.abs() < PI / 6.0 && d2.abs() < PI / 6.0 && (d1 + d2).abs() < PI / 6.0 {
        return Ok(d1 + d2);
    }
    if depth >= 48 {
        return Err(WeightError::ZeroOnContour { at: m });
    }
    Ok(arg_increment(f, a, m, fa, fm, tiny, depth + 1)?
        + arg_increment(f, m, b, fm, fb, tiny, depth + 1)?)
}

/// Winding number of `f` around the counter-clockwise boundary of `b`:
/// the number of zeros inside counted with multiplicity (for holomorphic
/// `f` without poles).
pub fn argument_count(
    f: &impl Fn(C64) -> Result<C64, ExprError>,
    b: &Bounds,
) -> Result<i64, WeightError> {
    let cs = corners(b);
    let mut pts = Vec::with_capacity(64);
    for e in 0..4 {
        let (p, q) = (cs[e], cs[(e + 1) % 4]);
        for s in 0..16 {
            pts.push(p + (q - p) * (s as f64 / 16.0));
        }
    }
    let vals: Vec<C64> = pts.iter().map(|&p| f(p)).collect::<Result<_, _>>()?;
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tiny = 1e-13 * scale.max(1e-300);
    if let Some(k) = vals.iter().position(|v| v.norm() <= tiny) {
        return Err(WeightError::ZeroOnContour { at: pts[k] });
    }
    let mut total = 0.0;
    for k in 0..pts.len() {
        let n = (k + 1) % pts.len();
        total += arg_increment(f, pts[k], pts[n], vals[k], vals[n], tiny, 0)?;
    }
    let turns = total / TAU;
    Ok(turns.round() as i64)
}

fn split(b: &Bounds, fx: f64, fy: f64) -> [Bounds; 4] {
    let xm = b.x0 + fx * (b.x1 - b.x0);
    let ym = b.y0 + fy * (b.y1 - b.y0);
    [
        Bounds::new(b.x0, xm, b.y0, ym),
        Bounds::new(xm, b.x1, b.y0, ym),
        Bounds::new(b.x0, xm, ym, b.y1),
        Bounds::new(xm, b.x1, ym, b.y1),
    ]
}

fn newton(
    f: &impl Fn(C64) -> Result<C64, ExprError>,
    df: &impl Fn(C64) -> Result<C64, ExprError>,
    start: C64,
    mult: usize,
) -> Option<C64> {
    let mut z = start;
    for _ in 0..80 {
        let v = f(z).ok()?;
        if v.norm() == 0.0 {
            return Some(z);
        }
        let d = df(z).ok()?;
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d * mult as f64;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    let v = f(z).ok()?;
    (v.norm() <= 1e-12).then_some(z)
}

struct Search<'a, F, D> {
    f: &'a F,
    df: &'a D,
    min_size: f64,
    scale: f64,
    found: Vec<Zero>,
}

impl<F, D> Search<'_, F, D>
where
    F: Fn(C64) -> Result<C64, ExprError>,
    D: Fn(C64) -> Result<C64, ExprError>,
{
    fn run(&mut self, b: Bounds, count: i64, depth: usize) -> Result<(), WeightError> {
        if count <= 0 {
            return Ok(());
        }
        let size = (b.x1 - b.x0).max(b.y1 - b.y0);
        let centre = C64::new(0.5 * (b.x0 + b.x1), 0.5 * (b.y0 + b.y1));
        let tol = 1e-9 * size;
        let inside = |z: C64| {
            z.re >= b.x0 - tol && z.re <= b.x1 + tol && z.im >= b.y0 - tol && z.im <= b.y1 + tol
        };
        if count == 1 || size < self.min_size {
            if let Some(z) = newton(self.f, self.df, centre, count as usize) {
                if inside(z) {
                    self.found.push(Zero {
                        at: z,
                        multiplicity: count as usize,
                    });
                    return Ok(());
                }
            }
            if size < self.min_size {
                return Err(WeightError::NoConvergence(format!(
                    "{count} zero(s) in a box of size {size:e} near {centre} but Newton failed"
                )));
            }
        }
        if count >= 2 && size < 1e-3 * self.scale {
            // a multiple zero: modified Newton, confirmed by a small box count
            if let Some(z) = newton(self.f, self.df, centre, count as usize) {
                let r = 0.25 * size;
                let bx = Bounds::new(z.re - r, z.re + r, z.im - r, z.im + r);
                if inside(z) && argument_count(self.f, &bx).ok() == Some(count) {
                    self.found.push(Zero {
                        at: z,
                        multiplicity: count as usize,
                    });
                    return Ok(());
                }
            }
        }
        if depth >= 60 {
            return Err(WeightError::NoConvergence(format!(
                "subdivision depth exceeded near {centre}"
            )));
        }
        for k in 0..8 {
            let off = 0.5 + 0.0137 * k as f64;
            let kids = split(&b, off, 1.0 - off);
            let counts: Result<Vec<i64>, WeightError> =
                kids.iter().map(|c| argument_count(self.f, c)).collect();
            match counts {
                Ok(cs) if cs.iter().sum::<i64>() == count => {
                    for (c, n) in kids.into_iter().zip(cs) {
                        self.run(c, n, depth + 1)?;
                    }
                    return Ok(());
                }
                Ok(_) | Err(WeightError::ZeroOnContour { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(WeightError::NoConvergence(format!(
            "no admissible split of the box around {centre}"
        )))
    }
}

/// Zeros of `Φ` inside `region`. Polynomials use all-roots iteration; other
/// expressions use argument-principle subdivision followed by Newton.
pub fn find_zeros(phi: &HoloData, region: Bounds) -> Result<Vec<Zero>, WeightError> {
    let f = |w: C64| phi.phi.eval(w);
    let mut zeros = if let Some(coeffs) = phi.phi.as_polynomial() {
        polynomial_zeros(&coeffs, region)?
    } else {
        let df = |w: C64| phi.dphi.eval(w);
        let total = argument_count(&f, &region)?;
        let scale = (region.x1 - region.x0).max(region.y1 - region.y0);
        let mut s = Search {
            f: &f,
            df: &df,
            min_size: 1e-7 * scale,
            scale,
            found: Vec::new(),
        };
        s.run(region, total, 0)?;
        merge_close(s.found, 1e-6 * scale)
    };
    for z in &zeros {
        let v = f(z.at)?.norm();
        if v > 1e-10 {
            return Err(WeightError::NoConvergence(format!(
                "|Φ| = {v:e} at reported zero {}",
                z.at
            )));
        }
    }
    zeros.sort_by(|a, b| a.at.re.total_cmp(&b.at.re).then(a.at.im.total_cmp(&b.at.im)));
    Ok(zeros)
}

/// Merges zeros closer than `eps`, adding multiplicities.
fn merge_close(found: Vec<Zero>, eps: f64) -> Vec<Zero> {
    let mut out: Vec<Zero> = Vec::new();
    for z in found {
        match out.iter_mut().find(|o| (o.at - z.at).norm() <= eps) {
            Some(o) => o.multiplicity += z.multiplicity,
            None => out.push(z),
        }
    }
    out
}

fn polynomial_zeros(coeffs: &[C64], region: Bounds) -> Result<Vec<Zero>, WeightError> {
    if coeffs.len() <= 1 {
        return Ok(Vec::new());
    }
    let roots = poly_roots(coeffs);
    // group numerically coincident roots (multiple roots converge slowly)
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for r in roots {
        match clusters
            .iter_mut()
            .find(|c| (c[0] - r).norm() <= 1e-5 * (1.0 + r.norm()))
        {
            Some(c) => c.push(r),
            None => clusters.push(vec![r]),
        }
    }
    let centres: Vec<C64> = clusters
        .iter()
        .map(|c| c.iter().sum::<C64>() / c.len() as f64)
        .collect();
    let f = |w: C64| Ok(poly_eval(coeffs, w));
    let scale = (region.x1 - region.x0).max(region.y1 - region.y0);
    let eps = 1e-12 * scale;
    let mut out = Vec::new();
    for (k, &z) in centres.iter().enumerate() {
        let inside = z.re >= region.x0 - eps
            && z.re <= region.x1 + eps
            && z.im >= region.y0 - eps
            && z.im <= region.y1 + eps;
        if !inside {
            continue;
        }
        let gap = centres
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, c)| (c - z).norm())
            .fold(f64::INFINITY, f64::min);
        let half = (0.25 * gap).min(1e-2 * (1.0 + z.norm()));
        let bx = Bounds::new(z.re - half, z.re + half, z.im - half, z.im + half);
        let multiplicity = match argument_count(&f, &bx) {
            Ok(n) if n > 0 => n as usize,
            _ => clusters[k].len(),
        };
        out.push(Zero { at: z, multiplicity });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn holo(text: &str) -> HoloData {
        HoloData::parse(text, &[c(0.1, 0.2), c(-0.3, 0.5)]).unwrap()
    }

    #[test]
    fn identity_has_single_zero() {
        let z = find_zeros(&holo("w"), Bounds::square(1.0)).unwrap();
        assert_eq!(z, vec![Zero { at: c(0.0, 0.0), multiplicity: 1 }]);
    }

    #[test]
    fn conjugate_pair() {
        let z = find_zeros(&holo("w^2 + 1"), Bounds::square(2.0)).unwrap();
        assert_eq!(z.len(), 2);
        assert!((z[0].at - c(0.0, -1.0)).norm() < 1e-14);
        assert!((z[1].at - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn exponential_zero_and_boundary_count() {
        let h = holo("exp(w) - 1");
        let region = Bounds::new(-1.0, 1.0, -4.0, 4.0);
        let f = |w: C64| h.eval(w);
        assert_eq!(argument_count(&f, &region).unwrap(), 1);
        let z = find_zeros(&h, region).unwrap();
        assert_eq!(z.len(), 1);
        assert!(z[0].at.norm() < 1e-12);
        assert_eq!(z[0].multiplicity, 1);
    }

    #[test]
    fn double_root_multiplicity() {
        let z = find_zeros(&holo("(w - 0.5)^2*(w + 0.5*i)"), Bounds::square(1.0)).unwrap();
        assert_eq!(z.len(), 2);
        let m: Vec<usize> = z.iter().map(|z| z.multiplicity).collect();
        assert!(m.contains(&2) && m.contains(&1));
        let z = find_zeros(&holo("exp(w)*(w - 0.3)^2"), Bounds::square(1.0)).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].multiplicity, 2);
        assert!((z[0].at - c(0.3, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn non_holomorphic_data_is_rejected() {
        assert!(matches!(
            HoloData::parse("conj(w)", &[c(0.1, 0.0)]),
            Err(WeightError::NotHolomorphic { .. })
        ));
    }
}
