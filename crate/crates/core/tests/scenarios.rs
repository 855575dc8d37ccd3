use std::sync::Arc;

use ghopf::analysis::{
    deltah_check, derive, derive_sampled, hopf_holomorphy_on, pullback_criterion, DeltahOptions,
    MU_FLOOR,
};
use ghopf::solver::{
    make_manufactured, shear, solve_hopf_flat, solve_hopf_flat_from, solve_tension, Family,
    SolveParams,
};
use ghopf::topology::{
    boundary_degree, boundary_values, openness_probe, preimage_count, uniqueness_report,
};
use ghopf::weight::{make_weight, HoloData, Weight, WeightSpec};
use ghopf::{Bounds, ComplexExpr, Grid, GridField, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn expr(s: &str) -> ComplexExpr {
    ComplexExpr::parse(s).unwrap()
}

fn custom(s: &str) -> Weight {
    make_weight(&WeightSpec::Custom(s.into())).unwrap()
}

fn unit_square(n: usize) -> Arc<Grid> {
    Arc::new(Grid::rect(Bounds::new(0.0, 1.0, 0.0, 1.0), n, n).unwrap())
}

/// Nodes at least `d` away from the boundary of the unit square.
fn inner(g: &Grid, d: f64) -> Vec<bool> {
    let steps = (d / g.hx()).round() as usize;
    g.compact_submask(steps)
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[test]
fn hyperbolic_hopf_differential_is_holomorphic_at_second_order() {
    let alpha = Weight::hyperbolic();
    let mut errs = Vec::new();
    for n in [33, 65] {
        let g = Arc::new(Grid::disk(n, 0.05).unwrap());
        let s = solve_tension(&alpha, &expr("0.8*w + 0.1*conj(w)^2"), &g, &SolveParams::default()).unwrap();
        assert!(s.converged && s.orientation_clean);
        let eta_h = GridField::from_fn(g.clone(), |k, _| C64::new(alpha.eval(s.h.get(k)).unwrap(), 0.0));
        let df = derive_sampled(&s.h, &eta_h, MU_FLOOR);
        let m = g.compact_submask((n - 1) / 8);
        errs.push(hopf_holomorphy_on(&df, &m).max_residual);
    }
    assert!(order(errs[0], errs[1]) >= 1.8, "{errs:?}");
}

#[test]
fn manufactured_family_a_is_a_fixed_point() {
    let m = make_manufactured(Family::a()).unwrap();
    let g = Arc::new(Grid::rect(Bounds::square(1.0), 65, 65).unwrap());
    let exact = GridField::sample(&m.h, &g).unwrap();
    let s = solve_hopf_flat_from(&m.eta, &m.h, &g, &SolveParams::default(), Some(&exact)).unwrap();
    assert!(s.converged);
    let dev = s.h.zip(&exact, |a, b| a - b).unwrap().max_abs_interior();
    assert!(dev < 1e-6, "{dev}");
    let phi = m.phi.sample(&g).unwrap();
    let eta = m.eta.sample(&g).unwrap();
    let mut s = s;
    s.set_hopf_residual(&eta, &phi);
    assert!(s.hopf_residual.unwrap().max < 1e-9);
}

#[test]
fn tilted_weight_solution_is_a_degree_one_homeomorphism() {
    let eta = custom("2 + y");
    let g = unit_square(65);
    let s = solve_hopf_flat(&eta, &expr("w + 0.2*conj(w)"), &g, &SolveParams::default()).unwrap();
    assert!(s.converged && s.frozen.is_empty() && s.orientation_clean);
    let d = boundary_degree(&boundary_values(&s.h), None).unwrap();
    assert_eq!((d.degree, d.monotone_violations), (1, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let w = C64::new(rng.gen_range(0.15..0.85), rng.gen_range(0.15..0.85));
        let v = s.h.interpolate(w).unwrap();
        assert_eq!(preimage_count(&s.h, v).count, 1);
        assert!(openness_probe(&s.h, w, &[0.05, 0.1]).unwrap().open);
    }
}

#[test]
fn tilted_weight_lemma_residual_decays_on_compacts() {
    let eta = custom("2 + y");
    let mut errs = Vec::new();
    for n in [65, 129] {
        let g = unit_square(n);
        let s = solve_hopf_flat(&eta, &expr("w + 0.2*conj(w)"), &g, &SolveParams::default()).unwrap();
        let df = derive(&s.h, &eta).unwrap();
        let r = deltah_check(&s.h, &eta, &df, &DeltahOptions::default()).unwrap();
        errs.push(r.residual.max_abs_where(&inner(&g, 0.25)));
    }
    assert!(order(errs[0], errs[1]) >= 1.8, "{errs:?}");
}

#[test]
fn two_initialisations_reach_the_same_solution() {
    let eta = custom("2 + y");
    let g = unit_square(65);
    let p = SolveParams::default();
    let trace = expr("w + 0.2*conj(w)");
    let a = solve_hopf_flat(&eta, &trace, &g, &p).unwrap();
    let bump = GridField::sample(&expr("w + 0.2*conj(w) + (0.3 + 0.3*i)*x*(1-x)*y*(1-y)"), &g).unwrap();
    let b = solve_hopf_flat_from(&eta, &trace, &g, &p, Some(&bump)).unwrap();
    let phi = derive(&a.h, &eta).unwrap().hopf;
    let u = uniqueness_report(&b.h, &a.h, &eta.sample(&g).unwrap(), &phi, &Default::default()).unwrap();
    assert!(u.max_f < 1e-6);
    assert!(u.beltrami_residual < 1e-6);
    assert!(u.min_gap > -1e-8);
}

#[test]
fn shear_solution_is_degenerate_and_cancels_the_pullback_field() {
    let eta = make_weight(&WeightSpec::XOnly("(1 + x)^2".into())).unwrap();
    let s = shear(&eta, 0.5, 0.0, 0.0, (0.0, 1.0)).unwrap();
    let g = unit_square(65);
    let h = s.sample(&g).unwrap();
    let df = derive(&h, &eta).unwrap();
    assert!(!df.finite_distortion);
    for k in g.interior() {
        assert!((df.mu.get(k).norm() - 1.0).abs() < 1e-6);
        assert!(df.jac.get(k).re.abs() < 1e-10);
    }
    assert!(s.hopf_residual(&g).unwrap().max < 1e-8);
    let alpha = custom("exp(2*re(w))");
    let r = pullback_criterion(&alpha, &h, &HoloData::constant(C64::new(0.25, 0.0)), 0.1).unwrap();
    assert!(r.max_abs_field < 1e-6);
}

#[test]
fn openness_separates_folds_from_quasiregular_maps() {
    let g = Arc::new(Grid::disk(129, 0.05).unwrap());
    let fold = GridField::sample(&expr("x"), &g).unwrap();
    let qr = GridField::sample(&expr("w + 0.5*conj(w)"), &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let w = C64::from_polar(rng.gen_range(0.0..0.6), rng.gen_range(0.0..std::f64::consts::TAU));
        let f = openness_probe(&fold, w, &[0.05, 0.1]).unwrap();
        assert!(!f.open && f.rows.iter().all(|r| r.winding == 0));
        assert!(openness_probe(&qr, w, &[0.05, 0.1]).unwrap().open);
    }
}
