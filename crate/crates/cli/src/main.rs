use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ghopf::ExecMode;
use ghopf_cli::config::{Command, ExperimentConfig, Overrides};
use ghopf_cli::presets::{preset, PRESETS};
use ghopf_cli::run;

#[derive(Parser)]
#[command(name = "ghopf", version, about = "Experiments for the generalized Hopf equation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for a map and write it with its derived fields.
    Solve(Target),
    /// Evaluate the openness criterion field and its masks.
    Criteria(Target),
    /// Build the natural coordinate of the data.
    Reduce(Target),
    /// Degree, preimage, openness and uniqueness probes.
    Verify(Target),
    /// Tabulate the shear solution of an x-only weight.
    Shear(Target),
    /// List the named experiments.
    Presets,
}

#[derive(Args)]
struct Target {
    /// Experiment file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named experiment.
    #[arg(long)]
    preset: Option<String>,
    /// Nodes per side.
    #[arg(long)]
    grid: Option<usize>,
    /// Gap between a disk grid and the unit circle.
    #[arg(long)]
    margin: Option<f64>,
    /// Solver update tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, conflicts_with = "par")]
    seq: bool,
    #[arg(long)]
    par: bool,
}

fn load(t: &Target, expected: Command) -> Result<ExperimentConfig> {
    let mut cfg = match (&t.config, &t.preset) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            ExperimentConfig::from_toml(&text)?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => bail!("pass --config FILE or --preset NAME"),
    };
    if cfg.command != expected {
        bail!(
            "`{}` is a `{}` experiment, not `{}`",
            cfg.name,
            cfg.command.as_str(),
            expected.as_str()
        );
    }
    let mode = if t.par {
        Some(ExecMode::Par)
    } else if t.seq {
        Some(ExecMode::Seq)
    } else {
        None
    };
    cfg.apply(&Overrides {
        grid: t.grid,
        margin: t.margin,
        tol: t.tol,
        out: t.out.clone(),
        mode,
    });
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool> {
    let (t, command) = match &cli.cmd {
        Cmd::Presets => {
            for p in PRESETS {
                println!("{:<26}{}", p.name, p.summary);
            }
            return Ok(true);
        }
        Cmd::Solve(t) => (t, Command::Solve),
        Cmd::Criteria(t) => (t, Command::Criteria),
        Cmd::Reduce(t) => (t, Command::Reduce),
        Cmd::Verify(t) => (t, Command::Verify),
        Cmd::Shear(t) => (t, Command::Shear),
    };
    let cfg = load(t, command)?;
    let out = run(&cfg)?;
    for c in &out.checks {
        println!(
            "{} {:<26} {:>12.4e}  (limit {:.4e})",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    println!("{}: {}", out.name, cfg.out_dir().join("summary.json").display());
    Ok(out.passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
