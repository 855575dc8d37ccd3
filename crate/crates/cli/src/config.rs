//! Experiment files: flat TOML tables, one per concern.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use ghopf::solver::SolveParams;
use ghopf::weight::{Region, WeightSpec};
use ghopf::{Bounds, ComplexExpr, ExecMode, Grid, C64};
use serde::{Deserialize, Serialize};

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub margin: Option<f64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub mode: Option<ExecMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Criteria,
    Reduce,
    Verify,
    Shear,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Criteria => "criteria",
            Command::Reduce => "reduce",
            Command::Verify => "verify",
            Command::Shear => "shear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridShape {
    Disk,
    Rect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub shape: GridShape,
    pub n: usize,
    /// Rows for rectangles; `n` when absent.
    pub ny: Option<usize>,
    /// Gap between the unit circle and the interior of a disk grid.
    pub margin: f64,
    /// `[x0, x1, y0, y1]` for rectangles.
    pub bounds: [f64; 4],
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            shape: GridShape::Disk,
            n: ghopf::grid::DEFAULT_NODES,
            ny: None,
            margin: ghopf::grid::DEFAULT_DISK_MARGIN,
            bounds: [-1.0, 1.0, -1.0, 1.0],
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<Grid>> {
        let g = match self.shape {
            GridShape::Disk => Grid::disk(self.n, self.margin)?,
            GridShape::Rect => {
                let [x0, x1, y0, y1] = self.bounds;
                Grid::rect(Bounds::new(x0, x1, y0, y1), self.n, self.ny.unwrap_or(self.n))?
            }
        };
        Ok(Arc::new(g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Harmonic map into `α(u)|du|²`, with the weight read as `α`.
    #[default]
    Tension,
    /// The equation with the weight on the domain.
    HopfFlat,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    pub solver: SolverKind,
    /// Dirichlet data, evaluated on boundary nodes.
    pub boundary: Option<String>,
    /// Holomorphic data `Φ`.
    pub phi: Option<String>,
    /// Second initial guess for `verify`.
    pub init: Option<String>,
    /// Closed form to compare against: the solution for `solve`, the
    /// criterion field for `criteria`, `a(x)` for `shear`.
    pub exact: Option<String>,
    /// Target weight whose pullback criterion is evaluated by `shear`.
    pub alpha: Option<String>,
    /// Field dumps that `verify` compares instead of solving.
    pub solutions: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub margin_steps: usize,
    pub zero_radius_steps: f64,
    /// Width of the `1 − δ ≤ |μ| ≤ 1` band for the pullback check.
    pub delta: f64,
    /// Random target values for preimage counts.
    pub probes: usize,
    /// Random points for the openness table.
    pub openness_points: usize,
    pub openness_radii: Vec<f64>,
    pub seed: u64,
    /// Expression whose zero set the problematic mask should equal.
    pub expected_problematic: Option<String>,
    /// Expression whose zero set the alignment mask should equal.
    pub expected_alignment: Option<String>,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            margin_steps: 2,
            zero_radius_steps: 5.0,
            delta: 0.1,
            probes: 50,
            openness_points: 10,
            openness_radii: vec![0.05, 0.1],
            seed: 1,
            expected_problematic: None,
            expected_alignment: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShearSpec {
    pub c: f64,
    pub x0: f64,
    pub a0: f64,
    pub interval: [f64; 2],
}

impl Default for ShearSpec {
    fn default() -> Self {
        ShearSpec {
            c: 0.5,
            x0: 0.0,
            a0: 0.0,
            interval: [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartSpec {
    pub region: Region,
    /// Basepoint; the region centre when absent.
    pub w0: Option<C64>,
    pub n: usize,
}

impl Default for ChartSpec {
    fn default() -> Self {
        ChartSpec {
            region: Region::Disk {
                center: C64::new(2.0, 0.0),
                radius: 0.5,
            },
            w0: None,
            n: 65,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub command: Command,
    pub description: Option<String>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSpec,
    /// `η` on the domain, or `α` on the target for tension solves.
    pub weight: Option<WeightSpec>,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub solver: SolveParams,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub shear: ShearSpec,
    #[serde(default)]
    pub chart: ChartSpec,
    /// Overrides for the named limits each command checks.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).context("invalid experiment config")?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            bail!("experiment name is empty");
        }
        let d = &self.data;
        for e in [&d.boundary, &d.phi, &d.init, &d.exact, &d.alpha].into_iter().flatten() {
            ComplexExpr::parse(e).with_context(|| format!("cannot parse `{e}`"))?;
        }
        for e in [&self.analysis.expected_problematic, &self.analysis.expected_alignment]
            .into_iter()
            .flatten()
        {
            ComplexExpr::parse(e).with_context(|| format!("cannot parse `{e}`"))?;
        }
        Ok(())
    }

    pub fn weight_spec(&self) -> WeightSpec {
        self.weight.clone().unwrap_or(WeightSpec::Constant(1.0))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.name))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.grid {
            self.grid.n = n;
            self.grid.ny = None;
            self.chart.n = n;
        }
        if let Some(m) = o.margin {
            self.grid.margin = m;
        }
        if let Some(t) = o.tol {
            self.solver.tol = t;
        }
        if let Some(d) = &o.out {
            self.out = Some(d.clone());
        }
        if let Some(m) = o.mode {
            self.solver.mode = m;
        }
    }

    /// The configured limit for `key`, else `default`.
    pub fn limit(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::from_toml(
            r#"
name = "x"
command = "solve"

[data]
boundary = "w"
"#,
        )
        .unwrap();
        assert_eq!(c.grid.n, 129);
        assert_eq!(c.solver.damping, 0.7);
        assert_eq!(c.weight_spec(), WeightSpec::Constant(1.0));
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_toml(
            r#"
name = "chart"
command = "reduce"

[weight]
kind = "custom"
expr = "2 + y"

[chart]
n = 33
region = { shape = "disk", center = [2.0, 0.0], radius = 0.5 }

[tolerances]
residual = 1e-6
"#,
        )
        .unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back.chart.n, 33);
        assert_eq!(back.limit("residual", 1.0), 1e-6);
        assert_eq!(back.weight_spec(), WeightSpec::Custom("2 + y".into()));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("name = \"\"\ncommand = \"solve\"").is_err());
        assert!(ExperimentConfig::from_toml("name = \"a\"\ncommand = \"solve\"\n[data]\nboundary = \"w +\"").is_err());
        assert!(ExperimentConfig::from_toml("name = \"a\"\ncommand = \"fly\"").is_err());
    }
}
