//! Riemannian curvature of a [`MetricField`] by finite differences of the
//! metric.
//!
//! Index conventions: `Γ^i_{jk}` is stored at `[i][j][k]`, and
//! `R_{ijkl} = g(∂_i, R(∂_k, ∂_l)∂_j)` with
//! `R^i_{jkl} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj} + Γ^i_{km}Γ^m_{lj} − Γ^i_{lm}Γ^m_{kj}`,
//! so `Ric_{jl} = R^i_{jil}` and the round sphere has positive curvature.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::diff::{all_first, all_first_with, all_second_with, first_extrapolated, ChartPoint, MetricField, Stencil};
use crate::error::{GeomError, Result};

/// Largest condition number for which the metric is inverted.
pub const MAX_CONDITION: f64 = 1e12;

/// Dense rank-`r` array over a `d`-dimensional chart, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dim: usize,
    rank: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Self { dim, rank, data: vec![0.0; dim.pow(rank as u32)] }
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }
    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Contracts slot `slot` with the matrix `m`: `T'_{..a..} = m_{ab} T_{..b..}`.
    pub fn transform_slot(&self, slot: usize, m: &DMatrix<f64>) -> Tensor {
        let d = self.dim;
        let stride = d.pow((self.rank - 1 - slot) as u32);
        let mut out = Tensor::zeros(d, self.rank);
        for (o, v) in out.data.iter_mut().enumerate() {
            let a = (o / stride) % d;
            let base = o - a * stride;
            *v = (0..d).map(|b| m[(a, b)] * self.data[base + b * stride]).sum();
        }
        out
    }

    /// `T_{i..} T_{j..} g^{ij} ...`, contracting every slot with `ginv`.
    pub fn norm2(&self, ginv: &DMatrix<f64>) -> f64 {
        let raised = (0..self.rank).fold(self.clone(), |t, s| t.transform_slot(s, ginv));
        raised.data.iter().zip(&self.data).map(|(a, b)| a * b).sum()
    }
}

/// The metric with its first and second partial derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub condition: f64,
    /// `dg[a] = ∂_a g`
    pub dg: Vec<DMatrix<f64>>,
    /// `ddg[a][b] = ∂_a ∂_b g`
    pub ddg: Vec<Vec<DMatrix<f64>>>,
}

fn invert(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    let amax = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amin = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let condition = amax / amin;
    if !(condition < MAX_CONDITION) {
        return Err(GeomError::Singular { what: "metric".into(), condition });
    }
    let inv = g.clone().try_inverse().ok_or(GeomError::Singular { what: "metric".into(), condition })?;
    Ok(((&inv + inv.transpose()) * 0.5, condition))
}

fn check_dim<G: MetricField + ?Sized>(gf: &G, p: &[f64]) -> Result<()> {
    if p.len() != gf.dim() {
        return Err(GeomError::Dimension { expected: gf.dim(), got: p.len() });
    }
    Ok(())
}

pub fn metric_jet<G: MetricField + ?Sized>(gf: &G, p: &[f64], st: Stencil) -> Result<MetricJet> {
    check_dim(gf, p)?;
    let f = |x: &[f64]| gf.metric(x);
    let g = gf.metric(p)?;
    let (g_inv, condition) = invert(&g)?;
    let dg = all_first_with(&f, p, st)?;
    let ddg = all_second_with(&f, p, st)?;
    Ok(MetricJet { g, g_inv, condition, dg, ddg })
}

fn christoffel_from_jet(j: &MetricJet) -> Tensor {
    let d = j.g.nrows();
    // lowered Γ_{l,jk} = ½(∂_j g_lk + ∂_k g_jl − ∂_l g_jk)
    let mut low = Tensor::zeros(d, 3);
    for l in 0..d {
        for a in 0..d {
            for b in 0..d {
                let v = 0.5 * (j.dg[a][(l, b)] + j.dg[b][(a, l)] - j.dg[l][(a, b)]);
                low.set(&[l, a, b], v);
            }
        }
    }
    low.transform_slot(0, &j.g_inv)
}

/// `Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{jl} − ∂_l g_{jk})`.
pub fn christoffel<G: MetricField + ?Sized>(gf: &G, p: &[f64]) -> Result<Tensor> {
    check_dim(gf, p)?;
    let f = |x: &[f64]| gf.metric(x);
    let g = gf.metric(p)?;
    let (g_inv, condition) = invert(&g)?;
    let dg = all_first(&f, p)?;
    Ok(christoffel_from_jet(&MetricJet { g, g_inv, condition, dg, ddg: Vec::new() }))
}

fn riemann_from_jet(j: &MetricJet, gamma: &Tensor) -> Tensor {
    let d = j.g.nrows();
    // Γ_{m,ab} = g_{mn} Γ^n_{ab}
    let gamma_low = gamma.transform_slot(0, &j.g);
    let mut r = Tensor::zeros(d, 4);
    for i in 0..d {
        for jj in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let second = 0.5
                        * (j.ddg[jj][k][(i, l)] + j.ddg[i][l][(jj, k)] - j.ddg[i][k][(jj, l)] - j.ddg[jj][l][(i, k)]);
                    let mut quad = 0.0;
                    for m in 0..d {
                        quad += gamma_low.get(&[m, jj, k]) * gamma.get(&[m, i, l])
                            - gamma_low.get(&[m, jj, l]) * gamma.get(&[m, i, k]);
                    }
                    r.set(&[i, jj, k, l], second + quad);
                }
            }
        }
    }
    r
}

/// Lowered Riemann tensor `R_{ijkl}` at `p`.
pub fn riemann<G: MetricField + ?Sized>(gf: &G, p: &[f64], st: Stencil) -> Result<Tensor> {
    let j = metric_jet(gf, p, st)?;
    let gamma = christoffel_from_jet(&j);
    Ok(riemann_from_jet(&j, &gamma))
}

fn ricci_from(r: &Tensor, g_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let d = r.dim();
    let mut ric = DMatrix::zeros(d, d);
    for jj in 0..d {
        for l in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                for k in 0..d {
                    s += g_inv[(i, k)] * r.get(&[i, jj, k, l]);
                }
            }
            ric[(jj, l)] = s;
        }
    }
    (&ric + ric.transpose()) * 0.5
}

/// Largest violation of the algebraic symmetries of `R_{ijkl}` (pair
/// antisymmetries, pair exchange and first Bianchi), relative to `max|R|`.
pub fn riemann_symmetry_residual(r: &Tensor) -> f64 {
    let d = r.dim();
    let scale = r.max_abs().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v = r.get(&[i, j, k, l]);
                    worst = worst
                        .max((v + r.get(&[j, i, k, l])).abs())
                        .max((v + r.get(&[i, j, l, k])).abs())
                        .max((v - r.get(&[k, l, i, j])).abs())
                        .max((v + r.get(&[i, k, l, j]) + r.get(&[i, l, j, k])).abs());
                }
            }
        }
    }
    worst / scale
}

/// Which derived quantities [`curvature_report_with`] computes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureOptions {
    /// Compute `∇R`, its norm and the contracted second Bianchi residual.
    pub covariant_derivative: bool,
    /// Stencil for the first and second derivatives of the metric.
    pub metric_stencil: Stencil,
    /// Coarsest step for differentiating `R` itself, scaled by `max(1, |x^a|)`.
    pub derivative_step: f64,
    /// Richardson levels for that derivative.
    pub derivative_levels: usize,
}

impl Default for CurvatureOptions {
    fn default() -> Self {
        Self {
            covariant_derivative: true,
            metric_stencil: Stencil { step: 2e-2, levels: 3 },
            derivative_step: 4e-2,
            derivative_levels: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub point: ChartPoint,
    pub metric: DMatrix<f64>,
    pub condition: f64,
    pub christoffel: Tensor,
    pub riemann_low: Tensor,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub riem_norm2: f64,
    /// `max|Ric − (scal/d) g|`
    pub einstein_residual: f64,
    /// Frobenius norm of `g`.
    pub metric_norm: f64,
    pub symmetry_residual: f64,
    pub nabla_r_norm: Option<f64>,
    /// `max_j |∇^i Ric_{ij} − ½ ∂_j scal|`
    pub bianchi_residual: Option<f64>,
}

impl CurvatureReport {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }
    /// Einstein residual below `rel · ‖g‖`.
    pub fn is_einstein(&self, rel: f64) -> bool {
        self.einstein_residual < rel * self.metric_norm
    }
}

pub fn curvature_report<G: MetricField + ?Sized>(gf: &G, p: &[f64]) -> Result<CurvatureReport> {
    curvature_report_with(gf, p, CurvatureOptions::default())
}

pub fn curvature_report_with<G: MetricField + ?Sized>(
    gf: &G,
    p: &[f64],
    opts: CurvatureOptions,
) -> Result<CurvatureReport> {
    let point = ChartPoint::new(p.to_vec())?;
    let j = metric_jet(gf, p, opts.metric_stencil)?;
    let d = j.g.nrows();
    let gamma = christoffel_from_jet(&j);
    let r = riemann_from_jet(&j, &gamma);
    let ricci = ricci_from(&r, &j.g_inv);
    let scalar = j.g_inv.dot(&ricci);
    let riem_norm2 = r.norm2(&j.g_inv);
    let einstein_residual = (&ricci - &j.g * (scalar / d as f64)).abs().max();
    let symmetry_residual = riemann_symmetry_residual(&r);

    let (nabla_r_norm, bianchi_residual) = if opts.covariant_derivative {
        let nabla = covariant_derivative(gf, p, &gamma, &r, &opts)?;
        let norm = nabla.norm2(&j.g_inv).max(0.0).sqrt();
        (Some(norm), Some(bianchi_from(&nabla, &j.g_inv)))
    } else {
        (None, None)
    };

    Ok(CurvatureReport {
        point,
        metric_norm: j.g.norm(),
        metric: j.g,
        condition: j.condition,
        christoffel: gamma,
        riemann_low: r,
        ricci,
        scalar,
        riem_norm2,
        einstein_residual,
        symmetry_residual,
        nabla_r_norm,
        bianchi_residual,
    })
}

/// `(∇_a R)_{ijkl}` stored at `[a, i, j, k, l]`.
fn covariant_derivative<G: MetricField + ?Sized>(
    gf: &G,
    p: &[f64],
    gamma: &Tensor,
    r: &Tensor,
    opts: &CurvatureOptions,
) -> Result<Tensor> {
    let d = p.len();
    let field = |x: &[f64]| -> Result<nalgebra::DVector<f64>> {
        Ok(nalgebra::DVector::from_vec(riemann(gf, x, opts.metric_stencil)?.data))
    };
    let mut out = Tensor::zeros(d, 5);
    let d4 = d.pow(4);
    for a in 0..d {
        let h = opts.derivative_step * p[a].abs().max(1.0);
        let dr = first_extrapolated(&field, p, a, h, opts.derivative_levels)?;
        out.data[a * d4..(a + 1) * d4].copy_from_slice(dr.as_slice());
    }
    for a in 0..d {
        for i in 0..d {
            for jj in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = 0.0;
                        for m in 0..d {
                            s += gamma.get(&[m, a, i]) * r.get(&[m, jj, k, l])
                                + gamma.get(&[m, a, jj]) * r.get(&[i, m, k, l])
                                + gamma.get(&[m, a, k]) * r.get(&[i, jj, m, l])
                                + gamma.get(&[m, a, l]) * r.get(&[i, jj, k, m]);
                        }
                        let o = out.offset(&[a, i, jj, k, l]);
                        out.data[o] -= s;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn bianchi_from(nabla: &Tensor, g_inv: &DMatrix<f64>) -> f64 {
    let d = nabla.dim();
    // ∇_a Ric_{jl} = g^{ik} ∇_a R_{ijkl}
    let mut nric = Tensor::zeros(d, 3);
    for a in 0..d {
        for jj in 0..d {
            for l in 0..d {
                let mut s = 0.0;
                for i in 0..d {
                    for k in 0..d {
                        s += g_inv[(i, k)] * nabla.get(&[a, i, jj, k, l]);
                    }
                }
                nric.set(&[a, jj, l], s);
            }
        }
    }
    let mut worst: f64 = 0.0;
    for jj in 0..d {
        let mut div = 0.0;
        let mut dscal = 0.0;
        for a in 0..d {
            for i in 0..d {
                div += g_inv[(a, i)] * nric.get(&[a, i, jj]);
                dscal += g_inv[(a, i)] * nric.get(&[jj, a, i]);
            }
        }
        worst = worst.max((div - 0.5 * dscal).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::FnMetric;

    fn half_plane() -> impl MetricField {
        FnMetric::new(2, |p: &[f64]| Ok(DMatrix::identity(2, 2) / (p[1] * p[1])))
    }

    fn sphere() -> impl MetricField {
        FnMetric::new(2, |p: &[f64]| {
            Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, p[0].sin().powi(2)])))
        })
    }

    #[test]
    fn half_plane_christoffel() {
        let g = christoffel(&half_plane(), &[0.3, 2.0]).unwrap();
        assert!((g.get(&[0, 0, 1]) + 0.5).abs() < 1e-9);
        assert!((g.get(&[0, 1, 0]) + 0.5).abs() < 1e-9);
        assert!((g.get(&[1, 0, 0]) - 0.5).abs() < 1e-9);
        assert!((g.get(&[1, 1, 1]) + 0.5).abs() < 1e-9);
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let flat = FnMetric::new(2, |_: &[f64]| Ok(DMatrix::identity(2, 2)));
        assert!(christoffel(&flat, &[1.0, -2.0]).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn half_plane_curvature() {
        let r = curvature_report(&half_plane(), &[0.3, 2.0]).unwrap();
        assert!((r.scalar + 2.0).abs() < 1e-4);
        assert!((r.riem_norm2 - 4.0).abs() < 1e-3);
        assert!(r.einstein_residual < 1e-6);
        assert!(r.nabla_r_norm.unwrap() < 1e-4);
        assert!(r.symmetry_residual < 1e-6);
    }

    #[test]
    fn sphere_is_positive() {
        let r = curvature_report(&sphere(), &[1.1, 0.2]).unwrap();
        assert!((r.scalar - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bianchi_on_a_warped_metric() {
        let gf = FnMetric::new(3, |p: &[f64]| {
            let mut g = DMatrix::identity(3, 3);
            g[(0, 0)] = 1.0 + 0.3 * p[1] * p[1];
            g[(1, 1)] = (0.4 * p[0]).exp();
            g[(2, 2)] = 2.0 + p[0].sin() * p[1];
            g[(0, 2)] = 0.1 * p[1];
            g[(2, 0)] = 0.1 * p[1];
            Ok(g)
        });
        let r = curvature_report(&gf, &[0.4, 0.7, -0.2]).unwrap();
        assert!(r.bianchi_residual.unwrap() < 1e-3);
        assert!(r.symmetry_residual < 1e-6);
        assert!(r.nabla_r_norm.unwrap() > 1e-3);
    }

    #[test]
    fn singular_metric() {
        let gf = FnMetric::new(2, |_: &[f64]| Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]))));
        assert!(matches!(christoffel(&gf, &[0.0, 0.0]), Err(GeomError::Singular { .. })));
    }

    #[test]
    fn tensor_norm_matches_matrix_trace() {
        let mut t = Tensor::zeros(2, 2);
        t.set(&[0, 1], 3.0);
        t.set(&[1, 0], 3.0);
        let ginv = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5]));
        assert!((t.norm2(&ginv) - 18.0).abs() < 1e-15);
    }
}
