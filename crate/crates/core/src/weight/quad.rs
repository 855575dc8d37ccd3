//! Adaptive Gauss–Kronrod (7, 15) quadrature for complex-valued integrands.

use crate::expr::C64;

/// Kronrod abscissae on `[0, 1]`, descending; the last one is the centre.
pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for `XGK[1]`, `XGK[3]`, `XGK[5]` and the centre.
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 nodes on `[-1, 1]` in ascending order.
pub(crate) fn nodes() -> [f64; 15] {
    let mut t = [0.0; 15];
    for k in 0..7 {
        t[k] = -XGK[k];
        t[14 - k] = XGK[k];
    }
    t
}

/// Kronrod and Gauss sums for samples at [`nodes`], unscaled.
pub(crate) fn rules(f: &[C64; 15]) -> (C64, C64) {
    let mut k = f[7] * WGK[7];
    let mut g = f[7] * WG[3];
    for j in 0..7 {
        let pair = f[j] + f[14 - j];
        k += pair * WGK[j];
        if j % 2 == 1 {
            g += pair * WG[j / 2];
        }
    }
    (k, g)
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub evaluations: usize,
}

/// `∫_a^b f(t) dt` by recursive bisection until each piece's Kronrod–Gauss
/// difference is below `max(abs_tol, rel_tol·|piece|) · (piece length)/(b − a)`.
/// Returns `None` when a piece shrinks below `1e-12 (b − a)` unconverged.
pub fn integrate(
    f: &mut impl FnMut(f64) -> C64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Option<QuadResult> {
    let mut out = QuadResult {
        value: C64::new(0.0, 0.0),
        error: 0.0,
        evaluations: 0,
    };
    let total = (b - a).abs();
    if total == 0.0 {
        return Some(out);
    }
    let t = nodes();
    let mut stack = vec![(a, b)];
    // left-to-right processing keeps the summation order fixed
    while let Some((lo, hi)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut fv = [C64::new(0.0, 0.0); 15];
        for (v, s) in fv.iter_mut().zip(t) {
            *v = f(mid + half * s);
        }
        out.evaluations += 15;
        let (k, g) = rules(&fv);
        let (k, g) = (k * half, g * half);
        let err = (k - g).norm();
        let share = (hi - lo).abs() / total;
        if err <= abs_tol.max(rel_tol * k.norm()) * share.max(1e-3) || err == 0.0 {
            out.value += k;
            out.error += err;
        } else if (hi - lo).abs() < 1e-12 * total {
            return None;
        } else {
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let one = [C64::new(1.0, 0.0); 15];
        let (k, g) = rules(&one);
        assert!((k.re - 2.0).abs() < 1e-15);
        assert!((g.re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomials_and_logs() {
        let r = integrate(&mut |t| C64::new(t.powi(5), 0.0), 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((r.value.re - 64.0 / 6.0).abs() < 1e-12);
        let r = integrate(&mut |t| C64::new(1.0 / (1.0 + t), 0.0), 0.0, 1.0, 1e-15, 1e-15).unwrap();
        assert!((r.value.re - 2f64.ln()).abs() < 1e-15);
        let r = integrate(&mut |t| C64::new(0.0, t).exp(), 0.0, std::f64::consts::PI, 1e-14, 1e-14)
            .unwrap();
        assert!((r.value - C64::new(0.0, 2.0)).norm() < 1e-14);
    }
}
