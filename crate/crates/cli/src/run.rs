//! Executes one experiment: solve or analyse, write field dumps and a JSON
//! summary, and check the results against the configured limits.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use ghopf::analysis::{
    criterion_field, derive, derive_sampled, hopf_holomorphy, pullback_criterion, CriterionOptions,
    DerivedFields, MU_FLOOR,
};
use ghopf::grid::{read_csv, write_csv};
use ghopf::solver::{
    shear, solve_hopf_flat_from, solve_tension_from, Solution, SolveParams,
};
use ghopf::topology::{
    boundary_degree, boundary_values, openness_probe, preimage_count, uniqueness_report,
    UniquenessOptions,
};
use ghopf::weight::{make_weight, natural_chart, ChartOptions, HoloData, Weight, WeightKind};
use ghopf::{ComplexExpr, Grid, GridField, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig, SolverKind};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }

    fn equals(name: &str, value: f64, expected: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit: expected,
            passed: value == expected,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub name: String,
    pub command: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// File names inside the output directory.
    pub artifacts: Vec<String>,
    pub report: Value,
}

struct Sink {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Sink {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Sink {
            dir,
            artifacts: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn field(&mut self, name: &str, f: &GridField) -> Result<()> {
        let p = self.path(&format!("{name}.csv"));
        write_csv(f, BufWriter::new(File::create(&p)?))?;
        Ok(())
    }

    fn mask(&mut self, name: &str, g: &Arc<Grid>, m: &[bool]) -> Result<()> {
        let f = GridField::from_fn(g.clone(), |k, _| C64::new(if m[k] { 1.0 } else { 0.0 }, 0.0));
        self.field(name, &f)
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<()> {
        let p = self.path(name);
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        fs::write(p, text)?;
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(p, body)?;
        Ok(())
    }
}

fn expr(text: &str) -> Result<ComplexExpr> {
    ComplexExpr::parse(text).with_context(|| format!("cannot parse `{text}`"))
}

fn required<'a>(v: &'a Option<String>, what: &str, cmd: Command) -> Result<&'a str> {
    v.as_deref()
        .with_context(|| format!("`{}` needs data.{what}", cmd.as_str()))
}

fn masked(g: &Grid) -> Vec<bool> {
    (0..g.len()).map(|k| g.in_mask(k)).collect()
}

/// `η` seen by the equation: the weight on the domain for the flat solver,
/// `α ∘ h` for harmonic maps into `α|du|²`.
fn equation_weight(kind: SolverKind, w: &Weight, h: &GridField) -> Result<GridField> {
    let g = h.grid().clone();
    Ok(match kind {
        SolverKind::HopfFlat => w.sample(&g)?,
        SolverKind::Tension => {
            let mut vals = vec![C64::new(f64::NAN, f64::NAN); g.len()];
            for k in g.masked() {
                vals[k] = C64::new(w.eval(h.get(k))?, 0.0);
            }
            GridField::new(g, vals)
        }
    })
}

fn run_solver(
    kind: SolverKind,
    w: &Weight,
    trace: &ComplexExpr,
    g: &Arc<Grid>,
    p: &SolveParams,
    init: Option<&GridField>,
) -> Result<Solution> {
    Ok(match kind {
        SolverKind::Tension => solve_tension_from(w, trace, g, p, init)?,
        SolverKind::HopfFlat => solve_hopf_flat_from(w, trace, g, p, init)?,
    })
}

fn solution_json(s: &Solution) -> Value {
    json!({
        "iterations": s.iterations,
        "converged": s.converged,
        "last_update": s.last_update,
        "tension_residual": s.tension_residual,
        "hopf_residual": s.hopf_residual,
        "frozen": s.frozen.len(),
        "degenerate_fraction": s.degenerate_fraction,
        "min_jacobian": s.min_jacobian,
        "orientation_clean": s.orientation_clean,
    })
}

fn derived_json(df: &DerivedFields) -> Value {
    json!({
        "max_mu": df.max_mu,
        "min_jacobian": df.min_jac,
        "undefined_mu": df.undefined_mu,
        "undefined_k": df.undefined_k,
        "finite_distortion": df.finite_distortion,
    })
}

fn write_derived(sink: &mut Sink, df: &DerivedFields) -> Result<()> {
    sink.field("mu", &df.mu)?;
    sink.field("jacobian", &df.jac)?;
    sink.field("distortion", &df.k)?;
    sink.field("hopf", &df.hopf)
}

/// Largest `|f − exact|` over masked nodes.
fn exact_error(f: &GridField, exact: &str) -> Result<f64> {
    let e = GridField::sample(&expr(exact)?, f.grid())?;
    let d = f.zip(&e, |a, b| a - b)?;
    Ok(d.max_abs_where(&masked(f.grid())))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let mut sink = Sink::new(cfg.out_dir())?;
    let recorded = ExperimentConfig {
        out: None,
        ..cfg.clone()
    };
    sink.text("config.toml", &recorded.to_toml()?)?;
    let (checks, report) = match cfg.command {
        Command::Solve => cmd_solve(cfg, &mut sink)?,
        Command::Criteria => cmd_criteria(cfg, &mut sink)?,
        Command::Reduce => cmd_reduce(cfg, &mut sink)?,
        Command::Verify => cmd_verify(cfg, &mut sink)?,
        Command::Shear => cmd_shear(cfg, &mut sink)?,
    };
    let mut out = Outcome {
        name: cfg.name.clone(),
        command: cfg.command.as_str().into(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        artifacts: Vec::new(),
        report,
    };
    sink.artifacts.push("summary.json".into());
    out.artifacts = sink.artifacts.clone();
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    fs::write(sink.dir.join("summary.json"), text)?;
    Ok(out)
}

type Ran = (Vec<Check>, Value);

fn cmd_solve(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Ran> {
    let g = cfg.grid.build()?;
    let w = make_weight(&cfg.weight_spec())?;
    let trace = expr(required(&cfg.data.boundary, "boundary", cfg.command)?)?;
    let init = match &cfg.data.init {
        Some(t) => Some(GridField::sample(&expr(t)?, &g)?),
        None => None,
    };
    let mut s = run_solver(cfg.data.solver, &w, &trace, &g, &cfg.solver, init.as_ref())?;
    let eta = equation_weight(cfg.data.solver, &w, &s.h)?;
    let df = derive_sampled(&s.h, &eta, MU_FLOOR);
    let hol = hopf_holomorphy(&df);
    if let Some(p) = &cfg.data.phi {
        let phi = GridField::sample(&expr(p)?, &g)?;
        s.set_hopf_residual(&eta, &phi);
    }
    sink.field("solution", &s.h)?;
    write_derived(sink, &df)?;
    sink.field("hopf_dbar", &ghopf::grid::d_wbar(&df.hopf))?;

    let mut checks = vec![Check::equals("converged", s.converged as u8 as f64, 1.0)];
    checks.push(Check::at_most(
        "tension_residual",
        s.tension_residual.max,
        cfg.limit("tension_residual", 10.0 * cfg.solver.residual_tol),
    ));
    if let Some(l) = cfg.tolerances.get("holomorphy_max") {
        checks.push(Check::at_most("holomorphy_max", hol.max_residual, *l));
    }
    let mut report = json!({
        "solver": solution_json(&s),
        "derived": derived_json(&df),
        "holomorphy": hol,
    });
    if let Some(e) = &cfg.data.exact {
        let err = exact_error(&s.h, e)?;
        report["exact_error"] = json!(err);
        checks.push(Check::at_most("exact_error", err, cfg.limit("exact_error", 1e-6)));
    }
    Ok((checks, report))
}

/// Nodes where `e` vanishes up to rounding.
fn zero_set(e: &str, g: &Arc<Grid>) -> Result<Vec<bool>> {
    let f = GridField::sample(&expr(e)?, g)?;
    let scale = f.max_abs_where(&masked(g)).max(1.0);
    Ok((0..g.len())
        .map(|k| g.in_mask(k) && f.get(k).norm() <= 1e-12 * scale)
        .collect())
}

fn mismatches(a: &[bool], b: &[bool], g: &Grid) -> usize {
    g.masked().filter(|&k| a[k] != b[k]).count()
}

fn cmd_criteria(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Ran> {
    let g = cfg.grid.build()?;
    let w = make_weight(&cfg.weight_spec())?;
    let phi = HoloData::on_grid(expr(required(&cfg.data.phi, "phi", cfg.command)?)?, &g)?;
    let opts = CriterionOptions {
        margin_steps: cfg.analysis.margin_steps,
        zero_radius_steps: cfg.analysis.zero_radius_steps,
    };
    let r = criterion_field(&w, &phi, &g, &opts)?;
    sink.field("im_field", &r.im_field)?;
    sink.mask("problematic", &g, &r.problematic_mask)?;
    sink.mask("alignment", &g, &r.alignment_mask)?;
    let mut report = json!({
        "ess_inf": r.ess_inf,
        "ess_inf_abs": r.ess_inf_abs,
        "min_abs_eta_y": r.min_abs_eta_y,
        "max_abs_eta_x": r.max_abs_eta_x,
        "problematic_fraction": r.problematic_fraction,
        "alignment_fraction": r.alignment_fraction,
        "zeros": r.zeros,
    });
    let mut checks = Vec::new();
    if let Some(e) = &cfg.data.exact {
        let ex = GridField::sample(&expr(e)?, &g)?;
        let mut worst = 0.0f64;
        for k in g.masked() {
            let (a, b) = (r.im_field.get(k).re, ex.get(k).re);
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
        report["exact_rel_error"] = json!(worst);
        checks.push(Check::at_most("exact_rel_error", worst, cfg.limit("exact_rel_error", 1e-8)));
    }
    if let Some(e) = &cfg.analysis.expected_problematic {
        let n = mismatches(&r.problematic_mask, &zero_set(e, &g)?, &g);
        report["problematic_mismatches"] = json!(n);
        checks.push(Check::equals("problematic_mismatches", n as f64, 0.0));
    }
    if let Some(e) = &cfg.analysis.expected_alignment {
        let n = mismatches(&r.alignment_mask, &zero_set(e, &g)?, &g);
        report["alignment_mismatches"] = json!(n);
        checks.push(Check::equals("alignment_mismatches", n as f64, 0.0));
    }
    Ok((checks, report))
}

fn cmd_reduce(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Ran> {
    let region = cfg.chart.region;
    let b = region.bounds();
    let mut probe = Vec::new();
    for a in 0..=16 {
        for c in 0..=16 {
            let p = C64::new(
                b.x0 + (b.x1 - b.x0) * a as f64 / 16.0,
                b.y0 + (b.y1 - b.y0) * c as f64 / 16.0,
            );
            if region.contains(p) {
                probe.push(p);
            }
        }
    }
    let phi = HoloData::new(expr(required(&cfg.data.phi, "phi", cfg.command)?)?, &probe)?;
    let w0 = cfg.chart.w0.unwrap_or_else(|| region.centre());
    let chart = natural_chart(
        &phi,
        region,
        w0,
        ChartOptions {
            n: cfg.chart.n,
            ..Default::default()
        },
    )?;
    let residual = GridField::from_fn(chart.grid.clone(), |k, _| {
        let w = chart.phi_of_z.get(k);
        let v = phi.eval(w).map(|p| chart.dphi.get(k).powi(2) * p - 1.0);
        C64::new(v.map(|v| v.norm()).unwrap_or(f64::NAN), 0.0)
    });
    sink.field("chart_phi", &chart.phi_of_z)?;
    sink.field("chart_dphi", &chart.dphi)?;
    sink.field("chart_residual", &residual)?;
    sink.json("chart.json", &chart.dump())?;
    let report = json!({
        "basepoint": w0,
        "half_size": chart.half_size,
        "residual_max": chart.residual_max,
        "residual_rms": chart.residual_rms,
        "psi_derivative_error": chart.psi_derivative_error,
        "loop_closure": chart.loop_closure,
        "inverse_error": chart.inverse_error,
    });
    let checks = vec![
        Check::at_most("chart_residual", chart.residual_max, cfg.limit("chart_residual", 1e-6)),
        Check::at_most("loop_closure", chart.loop_closure, cfg.limit("loop_closure", 1e-10)),
    ];
    Ok((checks, report))
}

/// Random points whose `clearance`-disks stay inside the masked region.
fn interior_points(g: &Grid, count: usize, clearance: f64, rng: &mut ChaCha8Rng) -> Result<Vec<C64>> {
    let steps = (clearance / g.hx().min(g.hy())).ceil() as usize + 2;
    let keep = g.compact_submask(steps);
    let b = g.bounds();
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            bail!("no interior points with clearance {clearance}");
        }
        let p = C64::new(rng.gen_range(b.x0..b.x1), rng.gen_range(b.y0..b.y1));
        let Some(k) = g.nearest_node(p) else { continue };
        if keep[k] && (g.point_at(k) - p).norm() <= g.hx().max(g.hy()) {
            out.push(p);
        }
    }
    Ok(out)
}

fn load(path: &Path) -> Result<GridField> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(read_csv(BufReader::new(f))?)
}

fn cmd_verify(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Ran> {
    let w = make_weight(&cfg.weight_spec())?;
    let kind = cfg.data.solver;
    let mut report = json!({});
    let (first, second) = if cfg.data.solutions.is_empty() {
        let g = cfg.grid.build()?;
        let trace = expr(required(&cfg.data.boundary, "boundary", cfg.command)?)?;
        let a = run_solver(kind, &w, &trace, &g, &cfg.solver, None)?;
        let second = match &cfg.data.init {
            Some(t) => {
                let init = GridField::sample(&expr(t)?, &g)?;
                let b = run_solver(kind, &w, &trace, &g, &cfg.solver, Some(&init))?;
                report["second_run"] = solution_json(&b);
                Some(b.h)
            }
            None => None,
        };
        report["first_run"] = solution_json(&a);
        (a.h, second)
    } else {
        let a = load(&cfg.data.solutions[0])?;
        let b = match cfg.data.solutions.get(1) {
            Some(p) => Some(load(p)?),
            None => None,
        };
        (a, b)
    };
    let g = first.grid().clone();
    sink.field("solution", &first)?;
    let mut checks = Vec::new();

    let deg = boundary_degree(&boundary_values(&first), None)?;
    checks.push(Check::equals("degree", deg.degree as f64, 1.0));
    checks.push(Check::equals("monotone_violations", deg.monotone_violations as f64, 0.0));
    report["degree"] = json!(deg);

    let a = &cfg.analysis;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let rmax = a.openness_radii.iter().copied().fold(0.0, f64::max);
    let targets = interior_points(&g, a.probes, 0.0, &mut rng)?;
    let mut histogram = std::collections::BTreeMap::<i64, usize>::new();
    let mut flagged = 0;
    for p in &targets {
        let v = first.interpolate(*p).context("target outside the sampled region")?;
        let pre = preimage_count(&first, v);
        *histogram.entry(pre.count).or_default() += 1;
        flagged += pre.flagged;
    }
    let not_one = targets.len() - histogram.get(&1).copied().unwrap_or(0);
    checks.push(Check::equals("preimage_count_not_one", not_one as f64, 0.0));
    report["preimage_histogram"] = json!(histogram
        .iter()
        .map(|(c, n)| (c.to_string(), *n))
        .collect::<std::collections::BTreeMap<_, _>>());
    report["preimage_flagged"] = json!(flagged);

    let mut table = Vec::new();
    let mut closed = 0;
    for p in interior_points(&g, a.openness_points, rmax, &mut rng)? {
        let r = openness_probe(&first, p, &a.openness_radii)?;
        if !r.open {
            closed += 1;
        }
        table.push(r);
    }
    checks.push(Check::equals("openness_failures", closed as f64, 0.0));
    report["openness_table"] = json!(table);

    if let Some(second) = second {
        let eta = equation_weight(kind, &w, &first)?;
        let phi = match &cfg.data.phi {
            Some(p) => GridField::sample(&expr(p)?, &g)?,
            None => derive_sampled(&first, &eta, MU_FLOOR).hopf,
        };
        let opts = UniquenessOptions {
            margin_steps: a.margin_steps,
            zero_radius_steps: a.zero_radius_steps,
            ..Default::default()
        };
        let u = uniqueness_report(&second, &first, &eta, &phi, &opts)?;
        sink.field("second_solution", &second)?;
        sink.field("difference", &u.f)?;
        sink.field("nu", &u.nu)?;
        checks.push(Check::at_most("max_f", u.max_f, cfg.limit("max_f", 1e-6)));
        checks.push(Check::at_most(
            "beltrami_residual",
            u.beltrami_residual,
            cfg.limit("beltrami_residual", 1e-6),
        ));
        checks.push(Check::at_least("min_gap", u.min_gap, -cfg.limit("gap_slack", 1e-8)));
        report["uniqueness"] = json!({
            "max_F": u.max_f,
            "boundary_TV": u.boundary_tv,
            "tv_excluded_length": u.tv_excluded_length,
            "proxy_integral": u.proxy_integral,
            "proxy_excluded": u.proxy_excluded,
            "nu_max": u.nu_max,
            "beltrami_residual": u.beltrami_residual,
            "min_gap": u.min_gap,
            "comparability_violations": u.comparability_violations,
            "anchor_gap": u.anchor_gap,
            "identical": u.identical,
        });
    }
    Ok((checks, report))
}

fn cmd_shear(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<Ran> {
    let w = make_weight(&cfg.weight_spec())?;
    if w.kind != WeightKind::XOnly && w.kind != WeightKind::Constant {
        bail!("`shear` needs an x-only weight");
    }
    let sp = &cfg.shear;
    let s = shear(&w, sp.c, sp.x0, sp.a0, (sp.interval[0], sp.interval[1]))?;
    let mut csv = String::from("x,a\n");
    for [x, a] in &s.table {
        csv.push_str(&format!("{x:.16e},{a:.16e}\n"));
    }
    sink.text("shear_table.csv", &csv)?;

    let mut checks = Vec::new();
    let mut report = json!({
        "c": s.c,
        "identity_error": s.identity_error,
        "quadrature_error": s.quadrature_error,
    });
    if let Some(e) = &cfg.data.exact {
        let e = expr(e)?;
        let mut err = 0.0f64;
        for [x, a] in &s.table {
            err = err.max((e.eval(C64::new(*x, 0.0))?.re - a).abs());
        }
        report["exact_error"] = json!(err);
        checks.push(Check::at_most("exact_error", err, cfg.limit("exact_error", 1e-10)));
    }

    let g = cfg.grid.build()?;
    let h = s.sample(&g)?;
    let df = derive(&h, &w)?;
    let interior = h.interior_mask();
    let mu_dev = df.mu.fold_where(&interior, 0.0f64, |m, v| m.max((v - 1.0).norm()));
    let jac = df.jac.max_abs_where(&interior);
    sink.field("solution", &h)?;
    write_derived(sink, &df)?;
    checks.push(Check::at_most("mu_deviation", mu_dev, cfg.limit("mu_deviation", 1e-6)));
    checks.push(Check::at_most("jacobian", jac, cfg.limit("jacobian", 1e-10)));
    checks.push(Check::equals("finite_distortion", df.finite_distortion as u8 as f64, 0.0));
    let hr = s.hopf_residual(&g)?;
    report["mu_deviation"] = json!(mu_dev);
    report["max_abs_jacobian"] = json!(jac);
    report["derived"] = derived_json(&df);
    report["hopf_residual"] = json!(hr);
    report["hopf_residual_fd"] = json!(s.hopf_residual_fd(&g)?);

    if let Some(a) = &cfg.data.alpha {
        let alpha = Weight::new(expr(a)?, WeightKind::Custom)?;
        let phi = HoloData::constant(C64::new(s.c * s.c, 0.0));
        let p = pullback_criterion(&alpha, &h, &phi, cfg.analysis.delta)?;
        sink.field("pullback", &p.field)?;
        checks.push(Check::at_most("pullback_max", p.max_abs_field, cfg.limit("pullback_max", 1e-6)));
        report["pullback"] = json!({
            "max_abs_field": p.max_abs_field,
            "identity_error": p.identity_error,
            "near_unit": p.near_unit,
            "max_ratio": p.max_ratio,
            "max_at_unit": p.max_at_unit,
        });
    }
    Ok((checks, report))
}
