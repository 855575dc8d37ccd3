use std::sync::Arc;

use ghopf::grid::{d_w, d_wbar, laplacian};
use ghopf::{ComplexExpr, Grid, GridField, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(g: &Arc<Grid>, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridField::from_fn(g.clone(), |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operators_are_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = Arc::new(Grid::disk(17, 0.05).unwrap());
        let (u, v) = (random_field(&g, s1), random_field(&g, s2));
        let comb = u.zip(&v, |p, q| a * p + b * q).unwrap();
        for op in [d_w, d_wbar, laplacian] {
            let (lu, lv, lc) = (op(&u), op(&v), op(&comb));
            for k in g.masked() {
                let want = a * lu.get(k) + b * lv.get(k);
                prop_assert!((lc.get(k) - want).norm() <= 1e-9 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn conjugate_swaps_wirtinger(seed in 0u64..1000) {
        let g = Arc::new(Grid::disk(17, 0.05).unwrap());
        let u = random_field(&g, seed);
        let (a, b) = (d_wbar(&u.conj()), d_w(&u).conj());
        for k in g.masked() {
            prop_assert!(a.get(k) == b.get(k));
        }
    }
}

#[test]
fn stencils_converge_at_second_order() {
    let f = ComplexExpr::parse("exp(w) * conj(w)^2").unwrap();
    let exact = f.d_wbar();
    let mut errs = Vec::new();
    for n in [33, 65] {
        let g = Arc::new(Grid::disk(n, 0.05).unwrap());
        let s = GridField::sample(&f, &g).unwrap();
        let d = d_wbar(&s);
        let ex = GridField::sample(&exact, &g).unwrap();
        let r = d.zip(&ex, |a, b| a - b).unwrap();
        errs.push(r.max_abs_interior());
    }
    assert!((errs[0] / errs[1]).log2() > 1.8, "{errs:?}");
}
