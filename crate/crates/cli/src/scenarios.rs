//! Job lists for configured checks and for the named acceptance scenarios.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qkgeom::cmap::QkPoint;
use qkgeom::prepotential::{CubicForm, PrepotentialModel};

use crate::checks::{fit_divergence_offset, Job};
use crate::config::{Check, ConfigError, ScenarioConfig};
use crate::points::{draw_many, resolve_points, SampleBox};
use crate::report::Site;

pub const SCENARIOS: [(&str, &str); 9] = [
    ("acceptance-1", "curvature norm for h = x³ at four (c, ρ)"),
    ("acceptance-2", "Einstein property and scalar curvature"),
    ("acceptance-3", "parallel curvature at c = 0, varying |Riem|² at c = 1"),
    ("acceptance-4", "closed form over complex hyperbolic bases"),
    ("acceptance-5", "scaling isometry"),
    ("acceptance-6", "frame forms and quaternionic structure"),
    ("acceptance-7", "lower bounds"),
    ("acceptance-8", "cubic base algebra"),
    ("acceptance-9", "completeness probes"),
];

pub const SCENARIO_SEED: u64 = 20_241_016;

/// Reference point for measuring the sign `σ`.
pub const SIGMA_POINT: [f64; 8] = [0.3, 1.2, 0.9, 0.4, -0.3, 0.6, 0.2, -0.5];

fn x_cubed() -> PrepotentialModel {
    PrepotentialModel::very_special(CubicForm::single_cube(1.0))
}

pub fn model_label(m: &PrepotentialModel) -> String {
    match m {
        PrepotentialModel::Quadratic { n } => format!("quadratic n={n}"),
        PrepotentialModel::VerySpecial(h) => format!("very-special n={}", h.n()),
    }
}

fn site(m: &PrepotentialModel, c: Option<f64>, point: usize, coords: Vec<f64>) -> Site {
    Site { model: model_label(m), c, point: Some(point), coords: Some(coords) }
}

const DEFAULT_DOMAIN_RHOS: [f64; 6] = [-3.0, -1.5, -0.5, 0.25, 1.5, 3.0];

pub fn config_jobs(cfg: &ScenarioConfig, sigma_ref: Option<f64>) -> Result<Vec<Job>, ConfigError> {
    let model = cfg.prepotential();
    let pts = resolve_points(&model, &cfg.points, cfg.seed, cfg.rho.as_deref())?;
    let mut jobs = Vec::new();
    let cs = &cfg.c;
    for check in &cfg.checks {
        for (k, p) in pts.iter().enumerate() {
            let at = |c: Option<f64>| site(&model, c, k, p.clone());
            let m = || model.clone();
            match check {
                Check::IdentitySuite => {
                    jobs.push(Job::Algebra { model: m(), site: at(None) });
                    for &c in cs {
                        jobs.push(Job::Identity { model: m(), c, site: at(Some(c)), with_domega: false, sigma_ref });
                    }
                }
                Check::Einstein => {
                    cs.iter().for_each(|&c| jobs.push(Job::Einstein { model: m(), c, site: at(Some(c)) }))
                }
                Check::Rnorm2 => cs.iter().for_each(|&c| jobs.push(Job::Rnorm2 { model: m(), c, site: at(Some(c)) })),
                Check::Isometry => {
                    for &c in cs {
                        for lambda in [2f64.ln(), -(2f64.ln())] {
                            jobs.push(Job::Isometry { model: m(), c, lambda, site: at(Some(c)) });
                        }
                    }
                }
                Check::Geodesic => {
                    for &c in cs {
                        jobs.push(Job::Geodesic { model: m(), c, site: at(Some(c)) });
                        jobs.push(Job::Radial { model: m(), c, epsilon_factor: (-4f64).exp(), site: at(Some(c)) });
                    }
                }
                Check::Domains if k == 0 => {
                    let rhos = cfg.rho.clone().unwrap_or_else(|| DEFAULT_DOMAIN_RHOS.to_vec());
                    for &c in cs {
                        for &rho in &rhos {
                            jobs.push(Job::Domain { model: m(), c, rho, site: at(Some(c)) });
                        }
                    }
                }
                Check::Domains | Check::All => {}
            }
        }
    }
    Ok(jobs)
}

pub fn scenario_names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}

/// Jobs for a named acceptance scenario.
pub fn scenario_jobs(name: &str, seed: u64, sigma_ref: Option<f64>) -> Result<Vec<Job>, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = 0usize;
    let mut jobs = Vec::new();
    let b = SampleBox::default();
    let mut sample =
        |m: &PrepotentialModel, bx: &SampleBox, count: usize| -> Result<Vec<(usize, QkPoint)>, ConfigError> {
            let pts = draw_many(m, &mut rng, bx, count)?;
            let out = pts.into_iter().enumerate().map(|(k, q)| (next + k, q)).collect();
            next += count;
            Ok(out)
        };
    let template = |rho: f64| vec![0.3, 1.2, rho, 0.1, 0.2, -0.4, 0.5, 0.3];
    match name {
        "acceptance-1" => {
            let m = x_cubed();
            for (k, (c, rho)) in [(0.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.5, 0.7)].into_iter().enumerate() {
                jobs.push(Job::Rnorm2 { model: m.clone(), c, site: site(&m, Some(c), k, template(rho)) });
            }
        }
        "acceptance-2" => {
            for m in [PrepotentialModel::quadratic(0), PrepotentialModel::quadratic(1), x_cubed()] {
                for c in [0.0, 0.5, 1.0] {
                    for (k, q) in sample(&m, &b, 10)? {
                        jobs.push(Job::Einstein { model: m.clone(), c, site: site(&m, Some(c), k, q.chart()) });
                    }
                }
            }
        }
        "acceptance-3" => {
            for m in [x_cubed(), PrepotentialModel::quadratic(0)] {
                for (k, q) in sample(&m, &b, 5)? {
                    jobs.push(Job::NablaR { model: m.clone(), c: 0.0, site: site(&m, Some(0.0), k, q.chart()) });
                }
            }
            let m = x_cubed();
            jobs.push(Job::Spread {
                model: m.clone(),
                c: 1.0,
                rhos: vec![0.5, 1.0, 1.5, 2.0],
                site: site(&m, Some(1.0), next, template(1.0)),
            });
        }
        "acceptance-4" => {
            for n in [0, 1] {
                let m = PrepotentialModel::quadratic(n);
                for c in [0.0, 1.0] {
                    for (k, q) in sample(&m, &b.with_rho(0.2, 4.0), 20)? {
                        jobs.push(Job::ClosedForm { model: m.clone(), c, site: site(&m, Some(c), k, q.chart()) });
                    }
                }
            }
        }
        "acceptance-5" => {
            for m in [x_cubed(), PrepotentialModel::quadratic(1)] {
                for lambda in [2f64.ln(), -(2f64.ln())] {
                    for (k, q) in sample(&m, &b.with_rho(0.3, 3.0), 20)? {
                        let c = [0.0, 0.5, 1.0, 2.0][k % 4];
                        jobs.push(Job::Isometry { model: m.clone(), c, lambda, site: site(&m, Some(c), k, q.chart()) });
                    }
                }
            }
        }
        "acceptance-6" => {
            for m in [x_cubed(), PrepotentialModel::quadratic(1), PrepotentialModel::quadratic(0)] {
                for c in [0.0, 0.5, 1.0] {
                    for (k, q) in sample(&m, &b, 4)? {
                        let s = site(&m, Some(c), k, q.chart());
                        jobs.push(Job::Algebra { model: m.clone(), site: Site { c: None, ..s.clone() } });
                        jobs.push(Job::Identity { model: m.clone(), c, site: s, with_domega: true, sigma_ref });
                    }
                }
            }
        }
        "acceptance-7" => {
            let m = x_cubed();
            for (k, q) in sample(&m, &b, 20)? {
                jobs.push(Job::Algebra { model: m.clone(), site: site(&m, None, k, q.chart()) });
            }
            for (k, q) in sample(&m, &b.with_rho(0.6, 5.0), 50)? {
                jobs.push(Job::LowerBound {
                    model: m.clone(),
                    c: 1.0,
                    epsilon: 0.5,
                    k: 1.0 / 3.0,
                    site: site(&m, Some(1.0), k, q.chart()),
                });
            }
        }
        "acceptance-8" => {
            let cubics = [
                CubicForm::single_cube(1.0),
                CubicForm::from_entries(2, &[(0, 0, 1, 2.0)]).expect("valid cubic"),
                CubicForm::from_entries(2, &[(0, 0, 1, 6.0), (1, 1, 1, 6.0)]).expect("valid cubic"),
            ];
            let bx = SampleBox { x: (0.3, 2.0), ..b };
            for h in cubics {
                let m = PrepotentialModel::very_special(h);
                for (k, q) in sample(&m, &bx, 10)? {
                    jobs.push(Job::Algebra { model: m.clone(), site: site(&m, None, k, q.chart()) });
                }
            }
        }
        "acceptance-9" => {
            let m = PrepotentialModel::quadratic(0);
            for c in [0.0, 1.0] {
                jobs.push(Job::Radial {
                    model: m.clone(),
                    c,
                    epsilon_factor: (-4f64).exp(),
                    site: site(&m, Some(c), 0, vec![1.0, 0.0, 0.0, 0.0]),
                });
            }
            let quad = PrepotentialModel::quadratic(1);
            let samples = 16_000;
            let offset = fit_divergence_offset(&quad, 0.1, samples).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            for (k, delta) in [1e-2, 1e-3, 1e-4].into_iter().enumerate() {
                jobs.push(Job::BaseDivergence {
                    model: quad.clone(),
                    delta,
                    offset,
                    samples,
                    site: Site { model: model_label(&quad), c: None, point: Some(k), coords: None },
                });
            }
        }
        other => {
            return Err(ConfigError::Invalid(format!(
                "unknown scenario '{other}' (known: {})",
                scenario_names().collect::<Vec<_>>().join(", ")
            )))
        }
    }
    Ok(jobs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::Tolerances;

    #[test]
    fn every_scenario_builds() {
        for name in scenario_names() {
            let jobs = scenario_jobs(name, SCENARIO_SEED, Some(1.0)).unwrap();
            assert!(!jobs.is_empty(), "{name}");
        }
        assert!(scenario_jobs("acceptance-10", 1, None).is_err());
    }

    #[test]
    fn fast_scenarios_pass() {
        for name in ["acceptance-4", "acceptance-5", "acceptance-8", "acceptance-9"] {
            for job in scenario_jobs(name, SCENARIO_SEED, Some(1.0)).unwrap() {
                for r in job.run(&Tolerances::default()) {
                    assert!(r.pass, "{name}: {r:?}");
                }
            }
        }
    }
}
