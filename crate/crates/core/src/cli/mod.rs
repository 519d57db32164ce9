//! Command-line front end.
//!
//! `eval` prints one JSON record, `sweep` and `figure` write a CSV plus a
//! JSON run manifest, `rerun` regenerates a manifest's outputs and checks
//! their checksums, and `decide` reports the relay-or-not decision.
//!
//! The default seed can be overridden with the `RELAYSEC_SEED` environment
//! variable; nothing else is read from the environment.

pub mod figures;
pub mod plan;

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{SecrecyTarget, SystemParams};
use crate::decision::decide_for;
use crate::geometry::SimulationWindow;
use crate::montecarlo::{EavesdropperModel, WindowRule, DEFAULT_TAIL_TOL};
use crate::quadrature::QuadratureConfig;
use figures::Figure;
use plan::{Axis, BaseParams, Column, Plan, Point, Quantity, SimulationSettings};

pub const DEFAULT_SEED: u64 = 20_110_601;

#[derive(Debug, Parser)]
#[command(
    name = "relaysec",
    version,
    about = "Secure connection probability with Poisson relays and eavesdroppers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one quantity and print a JSON record
    Eval(EvalArgs),
    /// Evaluate quantities over a one- or two-parameter grid
    Sweep(SweepArgs),
    /// Decide between direct and relay transmission for a target δ
    Decide(DecideArgs),
    /// Regenerate the data behind a figure
    Figure(FigureArgs),
    /// Rerun a manifest and verify that its outputs are reproduced
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Colluding,
    Noncolluding,
}

impl From<ModelArg> for EavesdropperModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Colluding => EavesdropperModel::Colluding,
            ModelArg::Noncolluding => EavesdropperModel::NonColluding,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Path-loss exponent (> 2)
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Eavesdropper density [per m²]
    #[arg(long = "lambda-e", default_value_t = 1e-5, allow_negative_numbers = true)]
    pub lambda_e: f64,
    /// Relay density [per m²]
    #[arg(long = "lambda-r", default_value_t = 1e-3, allow_negative_numbers = true)]
    pub lambda_r: f64,
    /// Source–destination distance [m]
    #[arg(long = "d-sd", default_value_t = 20.0, allow_negative_numbers = true)]
    pub d_sd: f64,
    /// Target secure connection probability, in (0, 1)
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value = "colluding")]
    pub model: ModelArg,
    /// Relay distance from the link midpoint [m]
    #[arg(long = "relay-r", default_value_t = 0.0, allow_negative_numbers = true)]
    pub relay_r: f64,
    /// Relay angle from the source direction [rad]
    #[arg(long = "relay-theta", default_value_t = 0.0, allow_negative_numbers = true)]
    pub relay_theta: f64,
}

impl ParamArgs {
    fn base(&self) -> BaseParams {
        BaseParams {
            alpha: self.alpha,
            lambda_e: self.lambda_e,
            lambda_r: self.lambda_r,
            d_sd: self.d_sd,
            delta: self.delta,
            model: self.model.into(),
            relay_r: self.relay_r,
            relay_theta: self.relay_theta,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Monte Carlo trials per estimate
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Master seed
    #[arg(long, env = "RELAYSEC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Fixed radius of the simulation window, centered on the midpoint [m]
    #[arg(long = "window-radius")]
    pub window_radius: Option<f64>,
    /// Truncation tolerance of the automatic window
    #[arg(long = "tail-tol", default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
}

impl SimArgs {
    fn settings(&self) -> anyhow::Result<SimulationSettings> {
        let window = match self.window_radius {
            Some(r) => WindowRule::Fixed(SimulationWindow::centered(r)?),
            None => {
                if !(self.tail_tol.is_finite() && self.tail_tol > 0.0) {
                    bail!("--tail-tol must be positive");
                }
                WindowRule::Auto(self.tail_tol)
            }
        };
        if self.trials == 0 {
            bail!("--trials must be at least 1");
        }
        Ok(SimulationSettings {
            seed: self.seed,
            trials: self.trials,
            window,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub quantity: Quantity,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Grid axis `param=start:stop:points[:log]`; give one or two
    #[arg(long, required = true)]
    pub sweep: Vec<Axis>,
    /// Quantity to tabulate; repeat for several columns
    #[arg(long, value_enum, required = true)]
    pub quantity: Vec<Quantity>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Base name of the output files
    #[arg(long, default_value = "sweep")]
    pub name: String,
}

#[derive(Debug, Clone, Args)]
pub struct DecideArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Print the report as JSON only
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub name: Figure,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// Manifest written by `sweep` or `figure`
    pub manifest: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Runs a parsed command, writing human-facing output to `out`.
pub fn run<W: std::io::Write>(cli: Cli, out: &mut W) -> anyhow::Result<()> {
    let quad = QuadratureConfig::default();
    match cli.command {
        Command::Eval(args) => {
            let point = Point::resolve(&args.params.base(), &[], &Default::default())?;
            let record = plan::eval_record(args.quantity, &point, &args.sim.settings()?, &quad)
                .with_context(|| format!("evaluating {}", args.quantity.name()))?;
            writeln!(out, "{}", serde_json::to_string(&record)?)?;
        }
        Command::Sweep(args) => {
            let plan = Plan {
                name: args.name.clone(),
                base: args.params.base(),
                axes: args.sweep.clone(),
                columns: args.quantity.iter().map(|q| Column::plain(*q)).collect(),
                simulation: args.sim.settings()?,
                quadrature: quad,
                notes: Vec::new(),
            };
            report(out, &plan::execute(&plan, &args.out)?)?;
        }
        Command::Decide(args) => {
            let p = &args.params;
            let params = SystemParams::new(p.alpha, p.lambda_e, p.lambda_r, p.d_sd)?;
            let delta = SecrecyTarget::new(p.delta.context("decide needs --delta")?)?;
            let report = decide_for(&params, delta, p.model.into());
            if !args.json {
                writeln!(out, "{report}")?;
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Figure(args) => {
            let plan = figures::plan(
                args.name,
                args.sim.seed,
                args.sim.trials,
                args.sim.settings()?.window,
                quad,
            );
            report(out, &plan::execute(&plan, &args.out)?)?;
        }
        Command::Rerun(args) => {
            let (emitted, changed) = plan::rerun(&args.manifest, &args.out)?;
            report(out, &emitted)?;
            if !changed.is_empty() {
                bail!("outputs differ from the manifest: {}", changed.join(", "));
            }
            writeln!(out, "all outputs match the manifest checksums")?;
        }
    }
    Ok(())
}

fn report<W: std::io::Write>(out: &mut W, e: &plan::Emitted) -> anyhow::Result<()> {
    writeln!(out, "wrote {}", e.csv.display())?;
    writeln!(out, "wrote {}", e.manifest.display())?;
    if let Some(d) = &e.diagnostics {
        writeln!(out, "wrote {} ({} failed cells)", d.display(), e.failures)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("relaysec").chain(args.iter().copied())).unwrap()
    }

    fn run_to_string(args: &[&str]) -> anyhow::Result<String> {
        let mut buf = Vec::new();
        run(parse(args), &mut buf)?;
        Ok(String::from_utf8(buf).unwrap())
    }

    #[test]
    fn cli_definition_is_sound() {
        Cli::command().debug_assert();
    }

    #[test]
    fn eval_records() {
        let s = run_to_string(&[
            "eval",
            "--quantity",
            "direct-colluding",
            "--alpha",
            "4",
            "--lambda-e",
            "1e-5",
            "--d-sd",
            "20",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!((v["value"].as_f64().unwrap() - 0.98046).abs() < 1e-5);
        let s = run_to_string(&[
            "eval",
            "--quantity",
            "d-max-direct",
            "--delta",
            "0.7",
            "--alpha",
            "4",
            "--lambda-e",
            "1e-5",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!((v["value"].as_f64().unwrap() - 85.0).abs() < 1.0);
        let s = run_to_string(&["eval", "--quantity", "direct-noncolluding"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["model"], "non-colluding");
        let s = run_to_string(&[
            "eval",
            "--quantity",
            "direct-mc",
            "--trials",
            "10",
            "--model",
            "noncolluding",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["model"], "non-colluding");
        assert_eq!(v["trials"], 10);
    }

    #[test]
    fn eval_rejects_bad_alpha() {
        let err = run_to_string(&["eval", "--quantity", "direct-colluding", "--alpha", "1.5"]).unwrap_err();
        assert!(format!("{err:#}").contains("alpha > 2"));
    }

    #[test]
    fn help_lists_every_quantity() {
        let mut cmd = Cli::command();
        let help = cmd.find_subcommand_mut("eval").unwrap().render_long_help().to_string();
        for q in Quantity::value_variants() {
            assert!(help.contains(&q.name()), "{}", q.name());
        }
    }

    #[test]
    fn decide_examples() {
        let base = [
            "decide",
            "--alpha",
            "4",
            "--lambda-e",
            "1e-5",
            "--delta",
            "0.7",
            "--json",
        ];
        for (d_sd, lambda_r, expected) in [
            ("80", "1e-3", "direct-sufficient"),
            ("100", "1e-3", "use-relay"),
            ("100", "1e-4", "infeasible"),
        ] {
            let mut args = base.to_vec();
            args.extend(["--d-sd", d_sd, "--lambda-r", lambda_r]);
            let s = run_to_string(&args).unwrap();
            let v: serde_json::Value = serde_json::from_str(&s).unwrap();
            assert_eq!(v["outcome"], expected);
        }
        let s = run_to_string(&["decide", "--delta", "0.7", "--d-sd", "100"]).unwrap();
        assert!(s.contains("relay transmission"));
        assert!(run_to_string(&["decide", "--delta", "1.5"]).is_err());
        assert!(run_to_string(&["decide"]).is_err());
    }

    #[test]
    fn unknown_figure_is_rejected() {
        assert!(Cli::try_parse_from(["relaysec", "figure", "fig9"]).is_err());
    }
}
