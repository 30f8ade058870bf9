//! Scenario configuration: TOML file plus command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use qkgeom::prepotential::{CubicForm, PrepotentialModel};

use crate::monomial::parse_cubic;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Toml { path: PathBuf, message: String },
    #[error("h = \"{src}\": {source}")]
    Polynomial { src: String, source: crate::monomial::ParseError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Quadratic,
    VerySpecial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    IdentitySuite,
    Einstein,
    Rnorm2,
    Isometry,
    Geodesic,
    Domains,
    All,
}

impl Check {
    pub const CONCRETE: [Check; 6] =
        [Check::IdentitySuite, Check::Einstein, Check::Rnorm2, Check::Isometry, Check::Geodesic, Check::Domains];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsFile {
    pub count: Option<usize>,
    pub explicit: Option<Vec<Vec<f64>>>,
    pub y_range: Option<(f64, f64)>,
    pub x_range: Option<(f64, f64)>,
    pub base_radius: Option<f64>,
    pub rho_range: Option<(f64, f64)>,
    pub fibre_range: Option<(f64, f64)>,
}

/// Raw settings as they appear in a TOML file. Command-line flags produce
/// the same structure and take precedence field by field.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: Option<ModelKind>,
    pub n: Option<usize>,
    pub h: Option<String>,
    /// `(μ, ν, ρ, value)` with 1-based indices and `value = ∂³h/∂x^μ∂x^ν∂x^ρ`.
    pub cubic: Option<Vec<(usize, usize, usize, f64)>>,
    pub c: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub checks: Option<Vec<Check>>,
    pub tolerances: Option<BTreeMap<String, f64>>,
    pub points: Option<PointsFile>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        toml::from_str(&text)
            .map_err(|e| ConfigError::Toml { path: path.into(), message: e.to_string().trim_end().into() })
    }

    /// Fields set in `over` replace those in `self`. An `h` string in
    /// `over` also discards a `cubic` list from `self`, and vice versa.
    pub fn overlay(mut self, over: RawConfig) -> Self {
        if over.h.is_some() || over.cubic.is_some() {
            self.h = over.h;
            self.cubic = over.cubic;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(model, n, c, rho, seed, checks, out, format);
        if let Some(t) = over.tolerances {
            self.tolerances.get_or_insert_with(BTreeMap::new).extend(t);
        }
        if let Some(p) = over.points {
            let base = self.points.get_or_insert_with(PointsFile::default);
            macro_rules! take_points {
                ($($f:ident),*) => { $( if p.$f.is_some() { base.$f = p.$f; } )* };
            }
            take_points!(count, explicit, y_range, x_range, base_radius, rho_range, fibre_range);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PointSpec {
    Explicit {
        points: Vec<Vec<f64>>,
    },
    Random {
        count: usize,
        y_range: (f64, f64),
        x_range: (f64, f64),
        base_radius: f64,
        rho_range: (f64, f64),
        fibre_range: (f64, f64),
    },
}

/// A validated configuration. Its JSON serialisation is what the report
/// hash covers; output location and format are deliberately left out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub n: usize,
    /// Normalised third derivatives, 0-based sorted indices.
    pub cubic: Vec<(usize, usize, usize, f64)>,
    pub c: Vec<f64>,
    pub rho: Option<Vec<f64>>,
    pub seed: u64,
    pub points: PointSpec,
    pub checks: Vec<Check>,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_POINTS: usize = 3;

fn check_range(name: &str, r: (f64, f64)) -> Result<(f64, f64), ConfigError> {
    if r.0.is_finite() && r.1.is_finite() && r.0 < r.1 {
        Ok(r)
    } else {
        Err(ConfigError::Invalid(format!("{name} = [{}, {}] is not an increasing finite range", r.0, r.1)))
    }
}

impl ScenarioConfig {
    pub fn resolve(raw: RawConfig, known_tolerances: &[&str]) -> Result<(Self, OutputSpec), ConfigError> {
        let invalid = |s: String| Err(ConfigError::Invalid(s));
        let model = raw.model.unwrap_or(ModelKind::VerySpecial);
        let (n, cubic) = match model {
            ModelKind::Quadratic => {
                if raw.h.is_some() || raw.cubic.is_some() {
                    return invalid("the quadratic model takes no cubic coefficients".into());
                }
                (raw.n.unwrap_or(1), Vec::new())
            }
            ModelKind::VerySpecial => {
                let (n_h, entries) = match (&raw.h, &raw.cubic) {
                    (Some(_), Some(_)) => return invalid("give either h or cubic, not both".into()),
                    (Some(src), None) => {
                        let p =
                            parse_cubic(src).map_err(|source| ConfigError::Polynomial { src: src.clone(), source })?;
                        (p.n, p.entries)
                    }
                    (None, Some(list)) => {
                        let mut out = Vec::with_capacity(list.len());
                        for (k, &(a, b, c, v)) in list.iter().enumerate() {
                            if a == 0 || b == 0 || c == 0 {
                                return invalid(format!("cubic entry {} uses index 0; indices start at 1", k + 1));
                            }
                            out.push((a - 1, b - 1, c - 1, v));
                        }
                        (out.iter().map(|e| e.0.max(e.1).max(e.2) + 1).max().unwrap_or(0), out)
                    }
                    (None, None) => (1, vec![(0, 0, 0, 6.0)]),
                };
                let n = raw.n.unwrap_or(n_h);
                if n < n_h || n == 0 {
                    return invalid(format!("n = {n} but the cubic uses x{n_h}"));
                }
                let form = CubicForm::from_entries(n, &entries).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                (n, form.entries())
            }
        };

        let c = raw.c.unwrap_or_else(|| vec![0.0]);
        if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
            return invalid("c must be a non-empty list of finite numbers".into());
        }
        if let Some(r) = &raw.rho {
            if r.is_empty() || r.iter().any(|v| !v.is_finite()) {
                return invalid("rho must be a non-empty list of finite numbers".into());
            }
        }

        let p = raw.points.unwrap_or_default();
        let dim = 4 * n + 4;
        let points = match p.explicit {
            Some(list) => {
                if list.is_empty() {
                    return invalid("points.explicit is empty".into());
                }
                if let Some((k, bad)) = list.iter().enumerate().find(|(_, v)| v.len() != dim) {
                    return invalid(format!("point {} has {} coordinates, expected {dim}", k + 1, bad.len()));
                }
                PointSpec::Explicit { points: list }
            }
            None => {
                let count = p.count.unwrap_or(DEFAULT_POINTS);
                if count == 0 {
                    return invalid("points.count must be positive".into());
                }
                let base_radius = p.base_radius.unwrap_or(0.8);
                if !(base_radius > 0.0 && base_radius < 1.0) {
                    return invalid(format!("points.base_radius = {base_radius} must lie in (0, 1)"));
                }
                let rho_range = check_range("points.rho_range", p.rho_range.unwrap_or((0.5, 3.0)))?;
                if rho_range.0 <= 0.0 {
                    return invalid("points.rho_range must be positive".into());
                }
                PointSpec::Random {
                    count,
                    y_range: check_range("points.y_range", p.y_range.unwrap_or((-1.0, 1.0)))?,
                    x_range: check_range("points.x_range", p.x_range.unwrap_or((0.5, 2.0)))?,
                    base_radius,
                    rho_range,
                    fibre_range: check_range("points.fibre_range", p.fibre_range.unwrap_or((-1.0, 1.0)))?,
                }
            }
        };

        let rnorm2_ok = model == ModelKind::VerySpecial && n == 1;
        let mut checks = raw.checks.unwrap_or_else(|| vec![Check::All]);
        if checks.contains(&Check::Rnorm2) && !rnorm2_ok {
            return invalid("rnorm2 needs the very special model with n = 1".into());
        }
        if checks.contains(&Check::All) {
            checks = Check::CONCRETE.into_iter().filter(|c| *c != Check::Rnorm2 || rnorm2_ok).collect();
        }
        checks.sort();
        checks.dedup();

        let tolerances = raw.tolerances.unwrap_or_default();
        for (k, v) in &tolerances {
            if !known_tolerances.contains(&k.as_str()) {
                return invalid(format!("unknown tolerance key '{k}' (known: {})", known_tolerances.join(", ")));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return invalid(format!("tolerance {k} = {v} must be finite and non-negative"));
            }
        }

        let cfg = ScenarioConfig {
            model,
            n,
            cubic,
            c,
            rho: raw.rho,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            points,
            checks,
            tolerances,
        };
        Ok((cfg, OutputSpec { out: raw.out, format: raw.format.unwrap_or_default() }))
    }

    pub fn prepotential(&self) -> PrepotentialModel {
        match self.model {
            ModelKind::Quadratic => PrepotentialModel::quadratic(self.n),
            ModelKind::VerySpecial => PrepotentialModel::very_special(
                CubicForm::from_entries(self.n, &self.cubic).expect("validated on resolve"),
            ),
        }
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }
}
