//! Individual checks. Each [`Job`] is a pure function of its inputs and
//! returns one or more records, so jobs can run in any order.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use qkgeom::cmap::{
    chn_closed_form, d_kahler_form_one, deformed_fs_metric, domain_classify, frame_form_metric, kahler_form_one,
    kahler_forms, lower_bound_gap, pairing_identity, quaternion_check, scaling_jacobian, scaling_map,
    structure_equation_residual, structure_from_holomorphic_coords, Deformation, DeformedFsField, DomainBranch,
    QkPoint,
};
use qkgeom::curvature::{curvature_report_with, CurvatureOptions};
use qkgeom::diff::Complex64;
use qkgeom::geodesics::{base_segment_length, geodesic_integrate, radial_divergence_probe, GeodesicState, Termination};
use qkgeom::prepotential::{special_matrices, PrepotentialModel};
use qkgeom::special_kahler::{
    base_metric, base_metric_inverse_cubic, complex_hessian_cubic, complex_hessian_fd, dc_bound_gap, dc_potential,
};

use crate::report::{Record, Site, Test};

/// Record names with their default tolerances.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("closed-form", 1e-10),
    ("dc-bound", 1e-10),
    ("dc-saturation", 1e-12),
    ("domega1", 1e-5),
    ("einstein", 1e-4),
    ("frame-metric", 1e-9),
    ("geodesic-energy", 1e-6),
    ("hermitian", 1e-8),
    ("isometry", 1e-10),
    ("deformation-gap", 1e-9),
    ("nabla-r", 1e-3),
    ("omega1-routes", 1e-7),
    ("pairing", 1e-10),
    ("quaternion", 1e-7),
    ("radial-bound", 1e-6),
    ("radial-length", 1e-3),
    ("rmap-euler", 1e-12),
    ("rmap-hessian", 1e-7),
    ("rmap-inverse", 1e-10),
    ("rmap-znz", 1e-10),
    ("riem-spread", 0.0),
    ("rnorm2", 1e-3),
    ("scalar", 1e-3),
    ("sigma", 1e-7),
    ("structure-equation", 1e-6),
];

pub fn tolerance_keys() -> Vec<&'static str> {
    DEFAULT_TOLERANCES.iter().map(|(k, _)| *k).collect()
}

#[derive(Debug, Clone, Default)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Tolerances {
    pub fn new(overrides: BTreeMap<String, f64>) -> Self {
        Self(overrides)
    }
    pub fn get(&self, key: &str) -> f64 {
        self.0.get(key).copied().unwrap_or_else(|| {
            DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).expect("known tolerance key")
        })
    }
}

/// `|Riem|²` of the deformed metric over `h = x³`.
pub fn riem_norm2_expected(c: f64, r: f64) -> f64 {
    let num = 528.0 * c.powi(7)
        + 2112.0 * c.powi(6) * r
        + 3664.0 * c.powi(5) * r.powi(2)
        + 3568.0 * c.powi(4) * r.powi(3)
        + 2110.0 * c.powi(3) * r.powi(4)
        + 764.0 * c.powi(2) * r.powi(5)
        + 161.0 * c * r.powi(6)
        + 17.0 * r.powi(7);
    128.0 * num / (3.0 * (c + r) * (2.0 * c + r).powi(6))
}

/// Scalar curvature of a quaternionic Kähler metric of real dimension
/// `4n + 4` with reduced scalar curvature −2.
pub fn scalar_expected(n: usize) -> f64 {
    let n = n as f64;
    -8.0 * (n + 1.0) * (n + 3.0)
}

/// `∫_ε^{ρ₀} (1/2ρ) √((ρ+2c)/(ρ+c)) dρ`, composite Simpson in `log ρ`.
pub fn radial_integral(c: f64, rho0: f64, eps: f64) -> f64 {
    let m = 20_000;
    let (a, b) = (eps.ln(), rho0.ln());
    let h = (b - a) / m as f64;
    let f = |u: f64| {
        let r = u.exp();
        0.5 * ((r + 2.0 * c) / (r + c)).sqrt()
    };
    let mut s = f(a) + f(b);
    for k in 1..m {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max() / b.abs().max().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
pub enum Job {
    /// Frame-form identities, quaternionic relations and, for quadratic
    /// models, the closed-form metric.
    Identity {
        model: PrepotentialModel,
        c: f64,
        site: Site,
        with_domega: bool,
        sigma_ref: Option<f64>,
    },
    /// `c`-independent identities: pairing and, for cubic models, base algebra.
    Algebra {
        model: PrepotentialModel,
        site: Site,
    },
    ClosedForm {
        model: PrepotentialModel,
        c: f64,
        site: Site,
    },
    Einstein {
        model: PrepotentialModel,
        c: f64,
        site: Site,
    },
    Rnorm2 {
        model: PrepotentialModel,
        c: f64,
        site: Site,
    },
    NablaR {
        model: PrepotentialModel,
        c: f64,
        site: Site,
    },
    Spread {
        model: PrepotentialModel,
        c: f64,
        rhos: Vec<f64>,
        site: Site,
    },
    Isometry {
        model: PrepotentialModel,
        c: f64,
        lambda: f64,
        site: Site,
    },
    LowerBound {
        model: PrepotentialModel,
        c: f64,
        epsilon: f64,
        k: f64,
        site: Site,
    },
    Geodesic {
        model: PrepotentialModel,
        c: f64,
        site: Site,
    },
    Radial {
        model: PrepotentialModel,
        c: f64,
        epsilon_factor: f64,
        site: Site,
    },
    BaseDivergence {
        model: PrepotentialModel,
        delta: f64,
        offset: f64,
        samples: usize,
        site: Site,
    },
    Domain {
        model: PrepotentialModel,
        c: f64,
        rho: f64,
        site: Site,
    },
}

impl Job {
    pub fn run(&self, tol: &Tolerances) -> Vec<Record> {
        match self {
            Job::Identity { model, c, site, with_domega, sigma_ref } => {
                identity(model, *c, site, *with_domega, *sigma_ref, tol)
            }
            Job::Algebra { model, site } => algebra(model, site, tol),
            Job::ClosedForm { model, c, site } => vec![closed_form(model, *c, site, tol)],
            Job::Einstein { model, c, site } => einstein(model, *c, site, tol),
            Job::Rnorm2 { model, c, site } => vec![rnorm2(model, *c, site, tol)],
            Job::NablaR { model, c, site } => vec![nabla_r(model, *c, site, tol)],
            Job::Spread { model, c, rhos, site } => vec![spread(model, *c, rhos, site, tol)],
            Job::Isometry { model, c, lambda, site } => vec![isometry(model, *c, *lambda, site, tol)],
            Job::LowerBound { model, c, epsilon, k, site } => vec![lower_bound(model, *c, *epsilon, *k, site, tol)],
            Job::Geodesic { model, c, site } => vec![geodesic_energy(model, *c, site, tol)],
            Job::Radial { model, c, epsilon_factor, site } => radial(model, *c, *epsilon_factor, site, tol),
            Job::BaseDivergence { model, delta, offset, samples, site } => {
                vec![base_divergence(model, *delta, *offset, *samples, site)]
            }
            Job::Domain { model, c, rho, site } => vec![domain(model, *c, *rho, site)],
        }
    }
}

fn point(model: &PrepotentialModel, site: &Site) -> qkgeom::Result<QkPoint> {
    QkPoint::from_chart(model, site.coords.as_deref().unwrap_or_default())
}

fn coords(site: &Site) -> &[f64] {
    site.coords.as_deref().unwrap_or_default()
}

/// Runs `f`, turning an error into a failed record named `name`.
fn guarded(site: &Site, name: &str, f: impl FnOnce() -> qkgeom::Result<Record>) -> Record {
    f().unwrap_or_else(|e| site.error(name, e))
}

fn identity(
    model: &PrepotentialModel,
    c: f64,
    site: &Site,
    with_domega: bool,
    sigma_ref: Option<f64>,
    tol: &Tolerances,
) -> Vec<Record> {
    let dc = Deformation(c);
    let setup = point(model, site).and_then(|q| Ok((deformed_fs_metric(model, dc, &q)?, q)));
    let (g, q) = match setup {
        Ok(v) => v,
        Err(e) => return vec![site.error("frame-metric", e)],
    };
    let mut out = Vec::new();
    out.push(guarded(site, "frame-metric", || {
        let e = rel(&frame_form_metric(model, dc, &q)?, &g);
        Ok(site.measure("frame-metric", Test::AtMost, e, None, tol.get("frame-metric")))
    }));
    match kahler_forms(model, dc, &q) {
        Ok(kf) => {
            out.push(guarded(site, "omega1-routes", || {
                let eq = kahler_form_one(model, dc, &q)?;
                let via_j = structure_from_holomorphic_coords(model, dc, &q)?.transpose() * &g;
                let e = (&kf.omega[0] - &eq).abs().max().max((&via_j - &eq).abs().max()) / eq.abs().max();
                Ok(site.measure("omega1-routes", Test::AtMost, e, None, tol.get("omega1-routes")))
            }));
            match kf.structures(&g) {
                Ok(js) => {
                    let qc = quaternion_check(&js);
                    let e = qc.square_residual.max(qc.product_residual);
                    out.push(site.measure("quaternion", Test::AtMost, e, None, tol.get("quaternion")));
                    let herm = rel(&(js[0].transpose() * &g * &js[0]), &g);
                    out.push(site.measure("hermitian", Test::AtMost, herm, None, tol.get("hermitian")));
                    out.push(match sigma_ref {
                        Some(s) => site.measure("sigma", Test::Abs, qc.sigma, Some(s), tol.get("sigma")),
                        None => site.flag("sigma", false, Some(qc.sigma), "no reference value"),
                    });
                }
                Err(e) => out.push(site.error("quaternion", e)),
            }
        }
        Err(e) => out.push(site.error("omega1-routes", e)),
    }
    out.push(guarded(site, "structure-equation", || {
        let e = structure_equation_residual(model, dc, &q)?;
        Ok(site.measure("structure-equation", Test::AtMost, e, None, tol.get("structure-equation")))
    }));
    if with_domega {
        out.push(guarded(site, "domega1", || {
            let d = d_kahler_form_one(model, dc, &q)?;
            let e = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok(site.measure("domega1", Test::AtMost, e, None, tol.get("domega1")))
        }));
    }
    if matches!(model, PrepotentialModel::Quadratic { .. }) {
        out.push(closed_form(model, c, site, tol));
    }
    out
}

fn closed_form(model: &PrepotentialModel, c: f64, site: &Site, tol: &Tolerances) -> Record {
    guarded(site, "closed-form", || {
        let q = point(model, site)?;
        let a = chn_closed_form(model.n(), c, &q)?;
        let b = deformed_fs_metric(model, Deformation(c), &q)?;
        Ok(site.measure("closed-form", Test::AtMost, rel(&a, &b), None, tol.get("closed-form")))
    })
}

const Z0: Complex64 = Complex64::new(0.8, 0.3);

fn algebra(model: &PrepotentialModel, site: &Site, tol: &Tolerances) -> Vec<Record> {
    let mut out = vec![guarded(site, "pairing", || {
        let (l, r) = pairing_identity(model, &point(model, site)?)?;
        Ok(site.measure("pairing", Test::AtMost, (l - r).abs().max(), None, tol.get("pairing")))
    })];
    let Some(h) = model.cubic() else { return out };
    let q = match point(model, site) {
        Ok(q) => q,
        Err(e) => {
            out.push(site.error("rmap-inverse", e));
            return out;
        }
    };
    let n = h.n();
    let x: Vec<f64> = q.base.imag_part();
    let k = complex_hessian_cubic(h, &x);
    out.push(guarded(site, "rmap-inverse", || {
        let inv = base_metric_inverse_cubic(h, &x)?;
        let e = (inv * &k - DMatrix::identity(n, n)).abs().max();
        Ok(site.measure("rmap-inverse", Test::AtMost, e, None, tol.get("rmap-inverse")))
    }));

    let hv = h.value(&x);
    let grad = h.gradient(&x);
    let hess = h.hessian(&x);
    let xv = DVector::from_column_slice(&x);
    let e_first = (grad.dot(&xv) - 3.0 * hv).abs();
    let e_second = (hess * &xv - &grad * 2.0).abs().max();
    out.push(site.measure("rmap-euler", Test::AtMost, e_first.max(e_second) / hv.abs(), None, tol.get("rmap-euler")));

    out.push(guarded(site, "rmap-znz", || {
        let mut z = DVector::from_element(n + 1, Z0);
        for (a, xa) in q.base.x().iter().enumerate() {
            z[a + 1] = Z0 * xa;
        }
        let f = special_matrices(model, &z)?.f;
        let lhs = 8.0 * Z0.norm_sqr() * hv;
        Ok(site.measure("rmap-znz", Test::AtMost, (lhs - f).abs() / lhs.abs(), None, tol.get("rmap-znz")))
    }));
    out.push(guarded(site, "rmap-hessian", || {
        let fd = complex_hessian_fd(model, &q.base)?;
        let d = fd.iter().zip(k.iter()).fold(0.0f64, |m, (a, b)| m.max((a - Complex64::new(*b, 0.0)).norm()));
        Ok(site.measure("rmap-hessian", Test::AtMost, d / k.abs().max(), None, tol.get("rmap-hessian")))
    }));
    out.push(guarded(site, "dc-bound", || {
        let e = dc_bound_gap(model, &q.base, 1.0 / 3.0)?;
        Ok(site.measure("dc-bound", Test::AtLeast, e, Some(0.0), tol.get("dc-bound")))
    }));
    if n == 1 {
        out.push(guarded(site, "dc-saturation", || {
            let g = base_metric(model, &q.base)?.matrix;
            let dc = dc_potential(model, &q.base)?;
            let e = (g[(0, 0)] - dc[0] * dc[0] / 12.0).abs() / g[(0, 0)];
            Ok(site.measure("dc-saturation", Test::AtMost, e, None, tol.get("dc-saturation")))
        }));
    }
    out
}

fn no_nabla() -> CurvatureOptions {
    CurvatureOptions { covariant_derivative: false, ..Default::default() }
}

fn einstein(model: &PrepotentialModel, c: f64, site: &Site, tol: &Tolerances) -> Vec<Record> {
    let field = DeformedFsField::new(model.clone(), c);
    match curvature_report_with(&field, coords(site), no_nabla()) {
        Ok(r) => vec![
            site.measure("einstein", Test::AtMost, r.einstein_residual / r.metric_norm, None, tol.get("einstein")),
            site.measure("scalar", Test::Rel, r.scalar, Some(scalar_expected(model.n())), tol.get("scalar")),
        ],
        Err(e) => vec![site.error("einstein", e)],
    }
}

fn rnorm2(model: &PrepotentialModel, c: f64, site: &Site, tol: &Tolerances) -> Record {
    guarded(site, "rnorm2", || {
        let field = DeformedFsField::new(model.clone(), c);
        let r = curvature_report_with(&field, coords(site), no_nabla())?;
        let rho = coords(site)[2];
        Ok(site.measure("rnorm2", Test::Rel, r.riem_norm2, Some(riem_norm2_expected(c, rho)), tol.get("rnorm2")))
    })
}

fn nabla_r(model: &PrepotentialModel, c: f64, site: &Site, tol: &Tolerances) -> Record {
    guarded(site, "nabla-r", || {
        let field = DeformedFsField::new(model.clone(), c);
        let r = curvature_report_with(&field, coords(site), CurvatureOptions::default())?;
        let v = r.nabla_r_norm.unwrap_or(f64::NAN);
        Ok(site.measure("nabla-r", Test::AtMost, v, None, tol.get("nabla-r")))
    })
}

/// Relative spread `(max − min)/min` of `|Riem|²` along a `ρ` scan.
fn spread(model: &PrepotentialModel, c: f64, rhos: &[f64], site: &Site, tol: &Tolerances) -> Record {
    guarded(site, "riem-spread", || {
        let field = DeformedFsField::new(model.clone(), c);
        let idx = 2 * model.n();
        let mut vals = Vec::with_capacity(rhos.len());
        for &rho in rhos {
            let mut p = coords(site).to_vec();
            p[idx] = rho;
            vals.push(curvature_report_with(&field, &p, no_nabla())?.riem_norm2);
        }
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        let rec = site.measure("riem-spread", Test::AtLeast, (hi - lo) / lo, Some(0.01), tol.get("riem-spread"));
        Ok(rec.with_detail(format!("ρ ∈ {rhos:?}")))
    })
}

fn isometry(model: &PrepotentialModel, c: f64, lambda: f64, site: &Site, tol: &Tolerances) -> Record {
    guarded(site, "isometry", || {
        let q = point(model, site)?;
        let jac = scaling_jacobian(lambda, model.n());
        let lhs = jac.transpose() * deformed_fs_metric(model, Deformation(c), &scaling_map(lambda, &q))? * &jac;
        let rhs = deformed_fs_metric(model, Deformation((-lambda).exp() * c), &q)?;
        let rec = site.measure("isometry", Test::AtMost, rel(&lhs, &rhs), None, tol.get("isometry"));
        Ok(rec.with_detail(format!("λ = {lambda}")))
    })
}

fn lower_bound(model: &PrepotentialModel, c: f64, eps: f64, k: f64, site: &Site, tol: &Tolerances) -> Record {
    guarded(site, "deformation-gap", || {
        let gap = lower_bound_gap(model, Deformation(c), eps, k, &point(model, site)?)?;
        let rec = site.measure("deformation-gap", Test::AtLeast, gap, Some(0.0), tol.get("deformation-gap"));
        Ok(rec.with_detail(format!("ε = {eps}, k = {k}")))
    })
}

/// Relative drift of `g(v, v)` along a unit-speed geodesic run for unit time.
fn geodesic_energy(model: &PrepotentialModel, c: f64, site: &Site, tol: &Tolerances) -> Record {
    guarded(site, "geodesic-energy", || {
        let field = DeformedFsField::new(model.clone(), c);
        let p = coords(site).to_vec();
        let g = qkgeom::diff::MetricField::metric(&field, &p)?;
        let dir = DVector::from_fn(p.len(), |i, _| 1.0 / (1.0 + i as f64));
        let v = &dir / dir.dot(&(&g * &dir)).sqrt();
        let state = GeodesicState::new(p, v.as_slice().to_vec())?;
        let tr = geodesic_integrate(&field, &state, 1.0, 100)?;
        match &tr.termination {
            Termination::TimeElapsed => {
                let e = (tr.last().energy(&field)? - 1.0).abs();
                Ok(site.measure("geodesic-energy", Test::AtMost, e, None, tol.get("geodesic-energy")))
            }
            other => Ok(site.flag("geodesic-energy", false, None, format!("stopped early: {other:?}"))),
        }
    })
}

/// Length of the `ρ` segment from the point's `ρ₀` down to `ρ₀·epsilon_factor`.
fn radial(model: &PrepotentialModel, c: f64, epsilon_factor: f64, site: &Site, tol: &Tolerances) -> Vec<Record> {
    let run = || -> qkgeom::Result<Vec<Record>> {
        let q = point(model, site)?;
        let eps = q.rho * epsilon_factor;
        let (len, bound) = radial_divergence_probe(model, c, q.rho, eps, &q)?;
        Ok(vec![
            site.measure(
                "radial-length",
                Test::Abs,
                len,
                Some(radial_integral(c, q.rho, eps)),
                tol.get("radial-length"),
            ),
            site.measure("radial-bound", Test::AtLeast, len, Some(bound), tol.get("radial-bound")),
        ])
    };
    run().unwrap_or_else(|e| vec![site.error("radial-length", e)])
}

/// Base segment length towards the boundary against `½|log δ| − offset`.
fn base_divergence(model: &PrepotentialModel, delta: f64, offset: f64, samples: usize, site: &Site) -> Record {
    guarded(site, "base-divergence", || {
        let len = base_segment_length(model, delta, samples)?;
        let bound = 0.5 * delta.ln().abs() - offset;
        let rec = site.measure("base-divergence", Test::AtLeast, len, Some(bound), 0.0);
        Ok(rec.with_detail(format!("δ = {delta}")))
    })
}

/// Offset `C` such that the base segment at `delta` has length `½|log δ| − C`.
pub fn fit_divergence_offset(model: &PrepotentialModel, delta: f64, samples: usize) -> qkgeom::Result<f64> {
    Ok(0.5 * delta.ln().abs() - base_segment_length(model, delta, samples)?)
}

/// The metric must assemble exactly on the positive definite branch.
fn domain(model: &PrepotentialModel, c: f64, rho: f64, site: &Site) -> Record {
    let branch = domain_classify(c, rho);
    let mut p = coords(site).to_vec();
    p[2 * model.n()] = rho;
    let assembled = QkPoint::from_chart(model, &p).and_then(|q| deformed_fs_metric(model, Deformation(c), &q));
    let detail = format!("ρ = {rho}: {}", branch.label());
    match (branch, assembled) {
        (DomainBranch::PosDef, Ok(g)) => {
            let min = nalgebra::SymmetricEigen::new(g).eigenvalues.min();
            site.flag("domain", min > 0.0, Some(min), detail)
        }
        (DomainBranch::PosDef, Err(e)) => site.flag("domain", false, None, format!("{detail}; {e}")),
        (_, Ok(_)) => site.flag("domain", false, None, format!("{detail}; assembled outside the branch")),
        (_, Err(_)) => site.flag("domain", true, None, detail),
    }
}
