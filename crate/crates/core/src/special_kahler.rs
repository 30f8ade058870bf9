//! The projective special Kähler base.
//!
//! Points are given in inhomogeneous coordinates `X = y + i x ∈ ℂⁿ` with
//! `X⁰ = 1`. Every real matrix on the base uses the chart ordering
//! `(y¹, …, yⁿ, x¹, …, xⁿ)`, and the complex structure is `J ∂_y = ∂_x`.
//!
//! The Kähler potential is `𝒦 = −log Σ X^I N_IJ X̄^J`; for cubic
//! prepotentials this equals `−log 8h(x)`. The metric is read off the complex
//! Hessian `𝒦_{μν̄}` through `ḡ(∂_yμ, ∂_yν) = ḡ(∂_xμ, ∂_xν) = Re 𝒦_{μν̄}` and
//! `ḡ(∂_yμ, ∂_xν) = Im 𝒦_{μν̄}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::diff::{self, Complex64};
use crate::error::{GeomError, Result};
use crate::prepotential::{homogeneous, special_matrices, CubicForm, PrepotentialModel};

/// Sign `s` in front of `d^c𝒦 = −s J*d𝒦`.
///
/// With `J ∂_y = ∂_x` the frame-form and Kähler-form identities of the c-map
/// hold for `s = +1`; see the cmap tests.
pub const DC_SIGN: f64 = 1.0;

/// A point of the special Kähler base, validated against the model domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PskPoint {
    x: DVector<Complex64>,
}

impl PskPoint {
    pub fn new(model: &PrepotentialModel, x: DVector<Complex64>) -> Result<Self> {
        model.check_base_point(&x)?;
        Ok(Self { x })
    }

    /// From real chart coordinates `(y¹..yⁿ, x¹..xⁿ)`.
    pub fn from_chart(model: &PrepotentialModel, chart: &[f64]) -> Result<Self> {
        let n = model.n();
        if chart.len() != 2 * n {
            return Err(GeomError::Dimension { expected: 2 * n, got: chart.len() });
        }
        Self::new(model, DVector::from_fn(n, |a, _| Complex64::new(chart[a], chart[n + a])))
    }

    pub fn x(&self) -> &DVector<Complex64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `y = Re X`
    pub fn real_part(&self) -> Vec<f64> {
        self.x.iter().map(|v| v.re).collect()
    }

    /// `x = Im X`
    pub fn imag_part(&self) -> Vec<f64> {
        self.x.iter().map(|v| v.im).collect()
    }

    pub fn chart(&self) -> Vec<f64> {
        self.real_part().into_iter().chain(self.imag_part()).collect()
    }

    /// `z = (1, X)`
    pub fn homogeneous(&self) -> DVector<Complex64> {
        homogeneous(&self.x)
    }
}

/// Real `2n × 2n` metric on the base in the `(y, x)` chart.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMetricAtPoint {
    pub matrix: DMatrix<f64>,
}

impl BaseMetricAtPoint {
    pub fn min_eigenvalue(&self) -> f64 {
        if self.matrix.nrows() == 0 {
            return f64::INFINITY;
        }
        SymmetricEigen::new(self.matrix.clone()).eigenvalues.min()
    }
}

/// `𝒦 = −log f(1, X)`.
pub fn kahler_potential(model: &PrepotentialModel, p: &PskPoint) -> Result<f64> {
    let sm = special_matrices(model, &p.homogeneous())?;
    if !(sm.f > 0.0) {
        return Err(GeomError::Domain(format!("log argument {} is not positive", sm.f)));
    }
    Ok(-sm.f.ln())
}

/// `𝒦 = −log 8h(x)`, the r-map form of the potential.
pub fn kahler_potential_cubic(h: &CubicForm, x: &[f64]) -> Result<f64> {
    let v = 8.0 * h.value(x);
    if !(v > 0.0) {
        return Err(GeomError::Domain(format!("8h(x) = {v} is not positive")));
    }
    Ok(-v.ln())
}

/// `𝒦_{μν̄} = −N_μν / f + (N z̄)_μ (N z)_ν / f²` at `z = (1, X)`.
///
/// Valid for any model; follows from `∂_μ f = (N z̄)_μ` and `∂_μ ∂_ν̄ f = N_μν`.
pub fn complex_hessian(model: &PrepotentialModel, p: &PskPoint) -> Result<DMatrix<Complex64>> {
    let z = p.homogeneous();
    let sm = special_matrices(model, &z)?;
    let n_c = sm.n.map(|v| Complex64::new(v, 0.0));
    let nzbar = &n_c * z.map(|v| v.conj());
    let nz = &n_c * &z;
    let f = sm.f;
    let n = p.n();
    Ok(DMatrix::from_fn(n, n, |a, b| -n_c[(a + 1, b + 1)] / f + nzbar[a + 1] * nz[b + 1] / (f * f)))
}

/// Closed form `𝒦_{μν̄} = −h_μν/(4h) + h_μ h_ν/(4h²)` for cubic prepotentials.
pub fn complex_hessian_cubic(h: &CubicForm, x: &[f64]) -> DMatrix<f64> {
    let hv = h.value(x);
    let hg = h.gradient(x);
    let hh = h.hessian(x);
    let n = h.n();
    DMatrix::from_fn(n, n, |a, b| -hh[(a, b)] / (4.0 * hv) + hg[a] * hg[b] / (4.0 * hv * hv))
}

/// `𝒦_{μν̄}` from a finite-difference real Hessian of `𝒦` in the `(y, x)` chart:
/// `𝒦_{μν̄} = ¼(∂_yμ∂_yν + ∂_xμ∂_xν) + (i/4)(∂_yμ∂_xν − ∂_xμ∂_yν)`.
pub fn complex_hessian_fd(model: &PrepotentialModel, p: &PskPoint) -> Result<DMatrix<Complex64>> {
    let n = p.n();
    let field = |c: &[f64]| -> Result<f64> { kahler_potential(model, &PskPoint::from_chart(model, c)?) };
    let hess: Vec<Vec<f64>> = diff::all_second(&field, &p.chart())?;
    Ok(DMatrix::from_fn(n, n, |a, b| {
        Complex64::new(0.25 * (hess[a][b] + hess[n + a][n + b]), 0.25 * (hess[a][n + b] - hess[n + a][b]))
    }))
}

/// Converts a Hermitian `𝒦_{μν̄}` to the real metric in the `(y, x)` chart.
pub fn hermitian_to_real(k: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = k.nrows();
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let v = k[(a, b)];
            g[(a, b)] = v.re;
            g[(n + a, n + b)] = v.re;
            g[(a, n + b)] = v.im;
            g[(n + a, b)] = -v.im;
        }
    }
    (&g + g.transpose()) * 0.5
}

/// The base metric `ḡ`.
///
/// Cubic models use the closed r-map form; others use [`complex_hessian`].
pub fn base_metric(model: &PrepotentialModel, p: &PskPoint) -> Result<BaseMetricAtPoint> {
    let k = match model {
        PrepotentialModel::VerySpecial(h) => {
            // keep the same domain checks as the generic path
            special_matrices(model, &p.homogeneous())?;
            complex_hessian_cubic(h, &p.imag_part()).map(|v| Complex64::new(v, 0.0))
        }
        PrepotentialModel::Quadratic { .. } => complex_hessian(model, p)?,
    };
    Ok(BaseMetricAtPoint { matrix: hermitian_to_real(&k) })
}

/// `ḡ` from a finite-difference Hessian of `𝒦`; a cross-check path.
pub fn base_metric_fd(model: &PrepotentialModel, p: &PskPoint) -> Result<BaseMetricAtPoint> {
    Ok(BaseMetricAtPoint { matrix: hermitian_to_real(&complex_hessian_fd(model, p)?) })
}

/// `𝒦^{ν̄λ} = −4h(x) h^{νλ}(x) + 2 x^ν x^λ`, the inverse of the cubic complex
/// Hessian.
pub fn base_metric_inverse_cubic(h: &CubicForm, x: &[f64]) -> Result<DMatrix<f64>> {
    let hh = h.hessian(x);
    let sv = hh.clone().svd(false, false).singular_values;
    let condition = sv.max() / sv.min();
    if !(condition.is_finite() && condition < 1e14) {
        return Err(GeomError::Singular { what: "h_μν".into(), condition });
    }
    let inv = hh.try_inverse().ok_or_else(|| GeomError::Singular { what: "h_μν".into(), condition })?;
    let hv = h.value(x);
    let n = h.n();
    Ok(DMatrix::from_fn(n, n, |a, b| -4.0 * hv * inv[(a, b)] + 2.0 * x[a] * x[b]))
}

/// `d𝒦` as a covector on the `(y, x)` chart.
pub fn dk(model: &PrepotentialModel, p: &PskPoint) -> Result<DVector<f64>> {
    let z = p.homogeneous();
    let sm = special_matrices(model, &z)?;
    let n_c = sm.n.map(|v| Complex64::new(v, 0.0));
    let nzbar = &n_c * z.map(|v| v.conj());
    let n = p.n();
    let mut out = DVector::zeros(2 * n);
    for a in 0..n {
        // ∂𝒦/∂X^a = −(N z̄)_a / f, ∂_y = 2 Re ∂_X, ∂_x = −2 Im ∂_X
        let d = -nzbar[a + 1] / sm.f;
        out[a] = 2.0 * d.re;
        out[n + a] = -2.0 * d.im;
    }
    Ok(out)
}

/// Standard complex structure on the `(y, x)` chart, `J ∂_yμ = ∂_xμ`.
pub fn base_complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        j[(n + a, a)] = 1.0;
        j[(a, n + a)] = -1.0;
    }
    j
}

/// `d^c𝒦 = −J*d𝒦`, i.e. `(d^c𝒦)(v) = −d𝒦(Jv)`.
pub fn dc_potential(model: &PrepotentialModel, p: &PskPoint) -> Result<DVector<f64>> {
    let j = base_complex_structure(p.n());
    Ok(-(j.transpose() * dk(model, p)?) * DC_SIGN)
}

/// Kähler form `ḡ(J·, ·)` of the base as an antisymmetric matrix; equals
/// `¼ dd^c𝒦`.
pub fn base_kahler_form(model: &PrepotentialModel, p: &PskPoint) -> Result<DMatrix<f64>> {
    let g = base_metric(model, p)?.matrix;
    let j = base_complex_structure(p.n());
    Ok(j.transpose() * g)
}

/// `g̃ = −Σ (h_μν/h) dy^μ dy^ν` on the `(y, x)` chart (zero `x` block).
pub fn gtilde(h: &CubicForm, x: &[f64]) -> DMatrix<f64> {
    let n = h.n();
    let hv = h.value(x);
    let hh = h.hessian(x);
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            g[(a, b)] = -hh[(a, b)] / hv;
        }
    }
    g
}

/// Smallest eigenvalue of `ḡ − (k/4)(d^c𝒦)²`.
pub fn dc_bound_gap(model: &PrepotentialModel, p: &PskPoint, k: f64) -> Result<f64> {
    let g = base_metric(model, p)?.matrix;
    let dc = dc_potential(model, p)?;
    let m = g - (&dc * dc.transpose()) * (k / 4.0);
    Ok(SymmetricEigen::new(m).eigenvalues.min())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn x_cubed() -> PrepotentialModel {
        PrepotentialModel::very_special(CubicForm::single_cube(1.0))
    }

    fn point(model: &PrepotentialModel, chart: &[f64]) -> PskPoint {
        PskPoint::from_chart(model, chart).unwrap()
    }

    #[test]
    fn potential_of_x_cubed_at_i() {
        let m = x_cubed();
        let k = kahler_potential(&m, &point(&m, &[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(k, -(8.0f64).ln(), epsilon = 1e-14);
    }

    #[test]
    fn potential_of_quadratic_at_origin() {
        let m = PrepotentialModel::quadratic(1);
        let k = kahler_potential(&m, &point(&m, &[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(k, -(2.0f64).ln(), epsilon = 1e-14);
    }

    #[test]
    fn metric_of_x_cubed_at_i() {
        let m = x_cubed();
        let g = base_metric(&m, &point(&m, &[0.3, 1.0])).unwrap().matrix;
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.75, 0.75]));
        assert!((g - expected).abs().max() < 1e-14);
    }

    #[test]
    fn metric_of_quadratic_at_origin() {
        for n in 1..=3 {
            let m = PrepotentialModel::quadratic(n);
            let g = base_metric(&m, &point(&m, &vec![0.0; 2 * n])).unwrap().matrix;
            assert!((g - DMatrix::identity(2 * n, 2 * n)).abs().max() < 1e-14);
        }
    }

    #[test]
    fn closed_form_matches_finite_differences() {
        let m = x_cubed();
        let p = point(&m, &[0.2, 1.7]);
        let exact = base_metric(&m, &p).unwrap().matrix;
        let fd = base_metric_fd(&m, &p).unwrap().matrix;
        let rel = (&exact - &fd).abs().max() / exact.abs().max();
        assert!(rel < 1e-7, "relative mismatch {rel:e}");
    }

    #[test]
    fn cubic_inverse_at_one() {
        let h = CubicForm::single_cube(1.0);
        let inv = base_metric_inverse_cubic(&h, &[1.0]).unwrap();
        assert_abs_diff_eq!(inv[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(inv[(0, 0)] * 0.75, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_cubic_hessian_is_reported() {
        // h = x1² x2 has h_μν = [[2 x2, 2 x1], [2 x1, 0]], singular at x1 = 0
        let h = CubicForm::from_entries(2, &[(0, 0, 1, 2.0)]).unwrap();
        assert!(matches!(base_metric_inverse_cubic(&h, &[0.0, 1.0]), Err(GeomError::Singular { .. })));
    }

    #[test]
    fn dc_potential_of_x_cubed() {
        let m = x_cubed();
        let dc = dc_potential(&m, &point(&m, &[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(dc[0].abs(), 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(dc[0], 3.0 * DC_SIGN, epsilon = 1e-13);
        assert_abs_diff_eq!(dc[1], 0.0, epsilon = 1e-13);
        for x in [0.4, 2.5] {
            let dc = dc_potential(&m, &point(&m, &[1.1, x])).unwrap();
            assert_abs_diff_eq!(dc[1], 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn dc_potential_vanishes_at_quadratic_origin() {
        let m = PrepotentialModel::quadratic(1);
        let dc = dc_potential(&m, &point(&m, &[0.0, 0.0])).unwrap();
        assert!(dc.abs().max() < 1e-15);
    }

    #[test]
    fn dk_matches_finite_differences() {
        let m = PrepotentialModel::quadratic(2);
        let p = point(&m, &[0.1, -0.3, 0.2, 0.25]);
        let field = |c: &[f64]| kahler_potential(&m, &PskPoint::from_chart(&m, c)?);
        let fd = diff::gradient(&field, &p.chart()).unwrap();
        assert!((fd - dk(&m, &p).unwrap()).abs().max() < 1e-9);
    }

    #[test]
    fn gtilde_saturates_on_x_cubed() {
        let h = CubicForm::single_cube(1.0);
        let m = x_cubed();
        let gt = gtilde(&h, &[1.0]);
        let dc = dc_potential(&m, &point(&m, &[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(gt[(0, 0)], -6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dc[0] * dc[0], 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gt[(0, 0)] + 2.0 / 3.0 * dc[0] * dc[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn outside_domain_points_are_rejected() {
        let m = x_cubed();
        assert!(PskPoint::from_chart(&m, &[0.0, -1.0]).is_err());
        let q = PrepotentialModel::quadratic(1);
        assert!(PskPoint::from_chart(&q, &[0.8, 0.8]).is_err());
        assert!(PskPoint::from_chart(&q, &[0.8]).is_err());
    }
}
