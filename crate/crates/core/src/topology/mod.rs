//! Degree, preimage and openness probes on sampled maps, and the comparison
//! of two solutions with the same boundary values.

mod preimage;
mod uniqueness;

use thiserror::Error;

use crate::expr::C64;
use crate::grid::{GridError, GridField};

pub use preimage::{openness_probe, preimage_count, OpennessReport, OpennessRow, Preimages};
pub use uniqueness::{uniqueness_report, UniquenessOptions, UniquenessReport};

/// A winding number is trusted only this close to an integer.
pub const WINDING_TOL: f64 = 0.25;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("loop passes within {min_dist:e} of the value")]
    LoopHitsValue { min_dist: f64 },
    #[error("loop is empty")]
    EmptyLoop,
    #[error("point {at} is outside the sampled region")]
    Outside { at: C64 },
    #[error("boundary traces differ by {max:e}")]
    TraceMismatch { max: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DegreeProbe {
    pub loop_len: usize,
    pub value: C64,
    pub winding: i64,
    /// Total argument increment over `2π`.
    pub raw: f64,
    pub distance_to_integer: f64,
    pub min_dist: f64,
    pub valid: bool,
}

/// Sign of the orientation of `(a, b, p)`, computed the same way whichever
/// order the edge is given in, so neighbouring polygons agree on shared edges.
fn side(a: C64, b: C64, p: C64) -> f64 {
    let swap = (a.re, a.im) > (b.re, b.im);
    let (s, t) = if swap { (b, a) } else { (a, b) };
    let v = (t.re - s.re) * (p.im - s.im) - (p.re - s.re) * (t.im - s.im);
    if swap {
        -v
    } else {
        v
    }
}

/// Winding number of the closed polygon `pts` about `p` by upward/downward
/// crossing counts. Points on the polygon are resolved as if moved slightly
/// right and up, which keeps sums over a subdivision additive.
pub fn polygon_winding(pts: &[C64], p: C64) -> i64 {
    let mut wn = 0i64;
    for (k, &a) in pts.iter().enumerate() {
        let b = pts[(k + 1) % pts.len()];
        if a.im <= p.im {
            if b.im > p.im && side(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.im <= p.im && side(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn segment_distance(a: C64, b: C64, p: C64) -> f64 {
    let d = b - a;
    let l = d.norm_sqr();
    if l == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / l).clamp(0.0, 1.0);
    (a + t * d - p).norm()
}

/// Distance from `p` to the closed polygon `pts`.
pub fn polygon_distance(pts: &[C64], p: C64) -> f64 {
    (0..pts.len())
        .map(|k| segment_distance(pts[k], pts[(k + 1) % pts.len()], p))
        .fold(f64::INFINITY, f64::min)
}

/// Sum of principal argument increments of `vals − value` around the closed
/// sequence, over `2π`.
fn raw_winding(vals: &[C64], value: C64) -> f64 {
    let mut total = 0.0;
    for k in 0..vals.len() {
        let a = vals[k] - value;
        let b = vals[(k + 1) % vals.len()] - value;
        total += (b / a).arg();
    }
    total / std::f64::consts::TAU
}

/// Winding of a closed sequence of values about `value`.
pub fn winding_of_values(vals: &[C64], value: C64) -> Result<DegreeProbe, TopologyError> {
    if vals.is_empty() {
        return Err(TopologyError::EmptyLoop);
    }
    let min_dist = vals.iter().map(|v| (v - value).norm()).fold(f64::INFINITY, f64::min);
    let scale = vals.iter().map(|v| v.norm()).fold(value.norm(), f64::max);
    if !(min_dist > 1e-12 * (1.0 + scale)) {
        return Err(TopologyError::LoopHitsValue { min_dist });
    }
    let raw = raw_winding(vals, value);
    let winding = raw.round() as i64;
    let distance_to_integer = (raw - winding as f64).abs();
    Ok(DegreeProbe {
        loop_len: vals.len(),
        value,
        winding,
        raw,
        distance_to_integer,
        min_dist,
        valid: distance_to_integer < WINDING_TOL,
    })
}

/// Winding of `h` along a closed loop of nodes about `value`.
pub fn winding(h: &GridField, nodes: &[usize], value: C64) -> Result<DegreeProbe, TopologyError> {
    let vals: Vec<C64> = nodes.iter().map(|&k| h.get(k)).collect();
    winding_of_values(&vals, value)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundaryDegree {
    pub degree: i64,
    pub centre: C64,
    /// Steps where `arg(h − centre)` decreases by more than the tolerance.
    pub monotone_violations: usize,
    pub samples: usize,
    pub valid: bool,
}

/// Degree of a closed boundary trace about `centre` (the mean of the trace
/// when `None`) and the number of backward steps in its argument.
pub fn boundary_degree(vals: &[C64], centre: Option<C64>) -> Result<BoundaryDegree, TopologyError> {
    if vals.is_empty() {
        return Err(TopologyError::EmptyLoop);
    }
    let centre = centre.unwrap_or_else(|| vals.iter().sum::<C64>() / vals.len() as f64);
    let probe = winding_of_values(vals, centre)?;
    let sign = if probe.winding < 0 { -1.0 } else { 1.0 };
    let monotone_violations = (0..vals.len())
        .filter(|&k| {
            let a = vals[k] - centre;
            let b = vals[(k + 1) % vals.len()] - centre;
            sign * (b / a).arg() < -1e-12
        })
        .count();
    Ok(BoundaryDegree {
        degree: probe.winding,
        centre,
        monotone_violations,
        samples: vals.len(),
        valid: probe.valid,
    })
}

/// Values of `h` on `g.boundary_loop()`.
pub fn boundary_values(h: &GridField) -> Vec<C64> {
    h.grid().boundary_loop().into_iter().map(|k| h.get(k)).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::ComplexExpr;
    use crate::grid::{Bounds, Grid};

    fn sampled(t: &str, g: &Arc<Grid>) -> GridField {
        GridField::sample(&ComplexExpr::parse(t).unwrap(), g).unwrap()
    }

    #[test]
    fn windings_of_simple_maps() {
        let g = Arc::new(Grid::rect(Bounds::square(1.0), 17, 17).unwrap());
        let lp = g.boundary_loop();
        let zero = C64::new(0.0, 0.0);
        assert_eq!(winding(&sampled("w", &g), &lp, zero).unwrap().winding, 1);
        assert_eq!(winding(&sampled("w^2", &g), &lp, zero).unwrap().winding, 2);
        assert_eq!(winding(&sampled("conj(w)", &g), &lp, zero).unwrap().winding, -1);
    }

    #[test]
    fn boundary_degrees() {
        let g = Arc::new(Grid::disk(65, 0.05).unwrap());
        let d = boundary_degree(&boundary_values(&sampled("w", &g)), None).unwrap();
        assert_eq!((d.degree, d.monotone_violations), (1, 0));
        let d = boundary_degree(&boundary_values(&sampled("w^2", &g)), Some(C64::new(0.0, 0.0))).unwrap();
        assert_eq!(d.degree, 2);
        let b = sampled("(w - 0.3)/(1 - 0.3*w)", &g);
        let d = boundary_degree(&boundary_values(&b), Some(C64::new(0.0, 0.0))).unwrap();
        assert_eq!((d.degree, d.monotone_violations), (1, 0));
    }

    #[test]
    fn polygon_winding_is_additive_on_shared_vertices() {
        // value sits on the shared corner of four unit squares
        let p = C64::new(0.0, 0.0);
        let sq = |x: f64, y: f64| {
            vec![
                C64::new(x, y),
                C64::new(x + 1.0, y),
                C64::new(x + 1.0, y + 1.0),
                C64::new(x, y + 1.0),
            ]
        };
        let total: i64 = [(-1.0, -1.0), (0.0, -1.0), (0.0, 0.0), (-1.0, 0.0)]
            .iter()
            .map(|&(x, y)| polygon_winding(&sq(x, y), p))
            .sum();
        assert_eq!(total, 1);
    }
}
