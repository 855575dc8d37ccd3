//! Named experiments, stored as the same TOML a user would write.

use anyhow::{anyhow, Result};

use crate::config::ExperimentConfig;

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "euclid-identity",
        summary: "flat target, identity boundary data: the solution is the identity",
        toml: r#"
name = "euclid-identity"
command = "solve"

[weight]
kind = "constant"
expr = 1.0

[data]
boundary = "w"
exact = "w"

[tolerances]
exact_error = 1e-10
tension_residual = 1e-10
"#,
    },
    Preset {
        name: "euclid-antiholo-perturb",
        summary: "flat target, boundary w + 0.3 conj(w)^2: the Hopf differential is holomorphic",
        toml: r#"
name = "euclid-antiholo-perturb"
command = "solve"

[weight]
kind = "constant"
expr = 1.0

[data]
boundary = "w + 0.3*conj(w)^2"

[tolerances]
holomorphy_max = 1e-4
"#,
    },
    Preset {
        name: "hyperbolic-identity",
        summary: "hyperbolic target, identity boundary data on the 0.95 circle",
        toml: r#"
name = "hyperbolic-identity"
command = "solve"

[weight]
kind = "hyperbolic"

[data]
boundary = "w"
exact = "w"

[tolerances]
exact_error = 1e-6
"#,
    },
    Preset {
        name: "hyperbolic-axes",
        summary: "criterion field of the hyperbolic weight with constant data: degenerate on both axes, aligned on the real axis",
        toml: r#"
name = "hyperbolic-axes"
command = "criteria"

[weight]
kind = "hyperbolic"

[data]
phi = "1"
exact = "-8*x*y*(1 - abs(w)^2)^(-6)"

[analysis]
expected_problematic = "x*y"
expected_alignment = "y"

[tolerances]
exact_rel_error = 1e-8
"#,
    },
    Preset {
        name: "phi-w",
        summary: "natural coordinate for data w on the disk |w - 2| <= 0.5",
        toml: r#"
name = "phi-w"
command = "reduce"

[data]
phi = "w"

[chart]
n = 65
region = { shape = "disk", center = [2.0, 0.0], radius = 0.5 }
"#,
    },
    Preset {
        name: "phi-const",
        summary: "natural coordinate for constant data 4 on the unit disk: an affine chart",
        toml: r#"
name = "phi-const"
command = "reduce"

[data]
phi = "4"

[chart]
n = 65
region = { shape = "disk", center = [0.0, 0.0], radius = 1.0 }
"#,
    },
    Preset {
        name: "uniqueness-two-seeds",
        summary: "weight 2 + y on the unit square from two initial guesses: degree one, one preimage, equal solutions",
        toml: r#"
name = "uniqueness-two-seeds"
command = "verify"

[grid]
shape = "rect"
n = 129
bounds = [0.0, 1.0, 0.0, 1.0]

[weight]
kind = "custom"
expr = "2 + y"

[data]
solver = "hopf-flat"
boundary = "w + 0.2*conj(w)"
init = "w + 0.2*conj(w) + (0.3 + 0.3*i)*x*(1 - x)*y*(1 - y)"
"#,
    },
    Preset {
        name: "shear-log",
        summary: "shear solution for the weight (1 + x)^2: a(x) = log(1 + x)",
        toml: r#"
name = "shear-log"
command = "shear"

[grid]
shape = "rect"
n = 129
bounds = [0.0, 1.0, 0.0, 1.0]

[weight]
kind = "x-only"
expr = "(1 + x)^2"

[data]
exact = "log(1 + x)"
alpha = "exp(2*re(w))"

[shear]
c = 0.5
interval = [0.0, 1.0]
"#,
    },
    Preset {
        name: "shear-asinh",
        summary: "shear solution for the weight 1 + x^2: a(x) = asinh(x)",
        toml: r#"
name = "shear-asinh"
command = "shear"

[grid]
shape = "rect"
n = 129
bounds = [-1.0, 1.0, -0.5, 0.5]

[weight]
kind = "x-only"
expr = "1 + x^2"

[data]
exact = "log(x + sqrt(1 + x^2))"
alpha = "(exp(re(w)) + exp(-re(w)))^2/4"

[shear]
c = 0.5
interval = [-1.0, 1.0]
"#,
    },
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let p = PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| anyhow!("unknown preset `{name}`; run `ghopf presets` for the list"))?;
    ExperimentConfig::from_toml(p.toml)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_under_its_name() {
        for p in PRESETS {
            let c = preset(p.name).unwrap();
            assert_eq!(c.name, p.name);
        }
        assert!(preset("nope").is_err());
    }
}
