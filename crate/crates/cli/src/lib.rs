//! Command-line scenario runner for the `qkgeom` library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod monomial;
pub mod points;
pub mod report;
pub mod scenarios;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use qkgeom::cmap::{deformed_fs_metric, kahler_forms, quaternion_check, Deformation, QkPoint};
use qkgeom::prepotential::{CubicForm, PrepotentialModel};
use qkgeom::special_kahler::DC_SIGN;

use crate::checks::{tolerance_keys, Job, Tolerances};
use crate::config::{Check, ConfigError, Format, ModelKind, OutputSpec, PointsFile, RawConfig, ScenarioConfig};
use crate::report::{config_hash, Environment, Report};

#[derive(Debug, Parser)]
#[command(name = "qkgeom", version, about = "Numerical checks for one-loop deformed c-map metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frame-form identities, quaternionic relations and base algebra.
    Verify,
    /// Einstein condition and scalar curvature.
    Einstein,
    /// |Riem|² against the closed expression for h = x³.
    Rnorm2,
    /// Scaling isometry between deformation parameters.
    Isometry,
    /// Geodesic energy conservation and radial segment lengths.
    Geodesic,
    /// Signature branches in the (c, ρ) plane.
    Domains,
    /// Checks listed in the configuration (all by default).
    Run,
    /// A named acceptance scenario, or `list`.
    Scenario { name: String },
}

#[derive(Debug, Args, Default)]
pub struct Opts {
    /// TOML configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Cubic polynomial, e.g. "x1^3 - 3 x1 x2^2".
    #[arg(long, global = true)]
    pub h: Option<String>,
    /// Deformation parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Option<Vec<f64>>,
    /// Values of ρ, comma separated; sampled points cycle through them.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub rho: Option<Vec<f64>>,
    /// Number of random points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance override, KEY=VALUE; repeatable.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

impl Opts {
    fn to_raw(&self) -> RawConfig {
        RawConfig {
            model: self.model,
            n: self.n,
            h: self.h.clone(),
            cubic: None,
            c: self.c.clone(),
            rho: self.rho.clone(),
            seed: self.seed,
            checks: None,
            tolerances: (!self.tol.is_empty()).then(|| self.tol.iter().cloned().collect()),
            points: self.points.map(|count| PointsFile { count: Some(count), ..Default::default() }),
            out: self.out.clone(),
            format: self.format,
        }
    }
}

/// Process exit status.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const USAGE: i32 = 2;
}

/// `σ` in `J₁J₂ = σJ₃` at a fixed reference point.
pub fn measure_sigma() -> Option<f64> {
    let m = PrepotentialModel::very_special(CubicForm::single_cube(1.0));
    let q = QkPoint::from_chart(&m, &scenarios::SIGMA_POINT).ok()?;
    let dc = Deformation(0.5);
    let g = deformed_fs_metric(&m, dc, &q).ok()?;
    let js = kahler_forms(&m, dc, &q).ok()?.structures(&g).ok()?;
    Some(quaternion_check(&js).sigma.round())
}

/// Runs jobs in parallel; records come back in job order.
pub fn execute(
    command: &str,
    config: serde_json::Value,
    seed: u64,
    jobs: &[Job],
    tol: &Tolerances,
    sigma: Option<f64>,
) -> Report {
    let records = jobs.par_iter().map(|j| j.run(tol)).collect::<Vec<_>>().into_iter().flatten().collect();
    let environment = Environment {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(&config),
        seed,
        s: DC_SIGN,
        sigma,
        config,
    };
    Report::assemble(environment, records)
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Verify => "verify".into(),
        Command::Einstein => "einstein".into(),
        Command::Rnorm2 => "rnorm2".into(),
        Command::Isometry => "isometry".into(),
        Command::Geodesic => "geodesic".into(),
        Command::Domains => "domains".into(),
        Command::Run => "run".into(),
        Command::Scenario { name } => format!("scenario {name}"),
    }
}

fn build(cli: &Cli, sigma: Option<f64>) -> Result<(Report, OutputSpec), ConfigError> {
    let mut raw = match &cli.opts.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    }
    .overlay(cli.opts.to_raw());
    let name = command_name(&cli.command);

    if let Command::Scenario { name: scen } = &cli.command {
        let seed = raw.seed.unwrap_or(scenarios::SCENARIO_SEED);
        let jobs = scenarios::scenario_jobs(scen, seed, sigma)?;
        let tol = Tolerances::default();
        let config = serde_json::json!({ "scenario": scen, "seed": seed });
        let out = OutputSpec { out: raw.out, format: raw.format.unwrap_or_default() };
        return Ok((execute(&name, config, seed, &jobs, &tol, sigma), out));
    }

    let fixed = match cli.command {
        Command::Verify => Some(Check::IdentitySuite),
        Command::Einstein => Some(Check::Einstein),
        Command::Rnorm2 => Some(Check::Rnorm2),
        Command::Isometry => Some(Check::Isometry),
        Command::Geodesic => Some(Check::Geodesic),
        Command::Domains => Some(Check::Domains),
        Command::Run | Command::Scenario { .. } => None,
    };
    if let Some(c) = fixed {
        raw.checks = Some(vec![c]);
    }
    let (cfg, out) = ScenarioConfig::resolve(raw, &tolerance_keys())?;
    let jobs = scenarios::config_jobs(&cfg, sigma)?;
    let config = serde_json::to_value(&cfg).expect("config serialises");
    let tol = Tolerances::new(cfg.tolerances.clone());
    Ok((execute(&name, config, cfg.seed, &jobs, &tol, sigma), out))
}

fn write_output(report: &Report, out: &OutputSpec) -> std::io::Result<()> {
    use std::io::Write;
    let json = report.to_json();
    match out.format {
        Format::Json => match &out.out {
            Some(p) => std::fs::write(p, json),
            None => std::io::stdout().write_all(json.as_bytes()),
        },
        Format::Csv => {
            let csv = report.to_csv().map_err(std::io::Error::other)?;
            match &out.out {
                Some(p) => {
                    std::fs::write(p, csv)?;
                    let jp = p.with_extension("json");
                    if jp != *p {
                        std::fs::write(jp, json)?;
                    }
                    Ok(())
                }
                None => std::io::stdout().write_all(csv.as_bytes()),
            }
        }
    }
}

/// Runs a parsed command line and returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    if let Command::Scenario { name } = &cli.command {
        if name == "list" {
            for (n, d) in scenarios::SCENARIOS {
                println!("{n}\t{d}");
            }
            return exit::PASS;
        }
    }
    let (report, out) = match build(cli, measure_sigma()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    if let Err(e) = write_output(&report, &out) {
        eprintln!("error: cannot write report: {e}");
        return exit::USAGE;
    }
    let s = &report.summary;
    eprintln!("{} of {} checks passed", s.passed, s.total);
    for r in report.records.iter().filter(|r| !r.pass).take(10) {
        eprintln!(
            "  FAIL {} [{}] c={:?} point={:?}: computed {:?}, expected {:?}, tol {} {}",
            r.name, r.model, r.c, r.point, r.computed, r.expected, r.tolerance, r.detail
        );
    }
    if report.all_pass() {
        exit::PASS
    } else {
        exit::FAIL
    }
}
