use crate::expr::C64;

fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    // coefficients in ascending order; returns p(z), p'(z)
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of `Σ c_k w^k` (ascending coefficients) by Aberth–Ehrlich
/// iteration followed by a few Newton steps that are kept only when they
/// reduce `|p|`. Leading zero coefficients are dropped.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while c.len() > 1 && c.last().map(|v| v.norm() == 0.0).unwrap_or(false) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    // roots at the origin are split off exactly
    let mut zeros_at_origin = 0;
    while c.len() > 1 && c[0].norm() == 0.0 {
        c.remove(0);
        zeros_at_origin += 1;
    }
    let m = c.len() - 1;
    let mut roots = vec![C64::new(0.0, 0.0); zeros_at_origin];
    if m == 0 {
        return roots;
    }
    let lead = c[m];
    // Cauchy-type radius bound
    let radius = 1.0
        + c[..m]
            .iter()
            .map(|v| (v / lead).norm())
            .fold(0.0f64, f64::max);
    let mean_radius = (c[0] / lead).norm().powf(1.0 / m as f64).clamp(1e-3, radius);
    let mut z: Vec<C64> = (0..m)
        .map(|k| C64::from_polar(mean_radius, std::f64::consts::TAU * k as f64 / m as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..m {
            let (p, dp) = horner(&c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: C64 = (0..m)
                .filter(|&j| j != i)
                .map(|j| C64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..5 {
            let (p, dp) = horner(&c, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            let cand = *zi - p / dp;
            if horner(&c, cand).0.norm() < p.norm() {
                *zi = cand;
            } else {
                break;
            }
        }
    }
    roots.extend(z);
    roots
}

pub(crate) fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    horner(coeffs, z).0
}
