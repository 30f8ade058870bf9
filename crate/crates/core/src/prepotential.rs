//! Holomorphic prepotentials and the matrices built from their jets.
//!
//! Two families are supported:
//!
//! * `Quadratic(n)`: `F = (i/2)((z⁰)² − Σ (z^μ)²)` on `|z⁰|² > Σ |z^μ|²`,
//!   whose projectivisation is complex hyperbolic space.
//! * `VerySpecial(h)`: `F = h(z¹, …, zⁿ) / z⁰` for a real cubic form `h`
//!   (the image of the r-map).
//!
//! From the second derivatives `F_IJ` we build the real matrix
//! `N_IJ = 2 Im F_IJ`, the cone function `f = Σ N_IJ z^I z̄^J`, the complex
//! symmetric matrix `𝒩 = 𝓡 + i𝓘` and the block matrix `Ĥ` that couples the
//! fibre coordinates `p = (ζ̃_I, ζ^I)` in the c-map metric.

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::diff::Complex64;
use crate::error::{GeomError, Result};

/// Eigenvalues closer to zero than this (relative to the largest one) make a
/// signature test fail instead of guessing.
pub const SIGNATURE_TOL: f64 = 1e-10;

fn i_unit() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// A real cubic form `h(x) = (1/6) Σ h_{μνρ} x^μ x^ν x^ρ`.
///
/// Coefficients are stored fully symmetric and normalised so that
/// `h_{μνρ} = ∂³h/∂x^μ∂x^ν∂x^ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicForm {
    n: usize,
    coeffs: Vec<f64>,
}

impl CubicForm {
    /// Builds a form from `(μ, ν, ρ, value)` entries with 0-based indices.
    ///
    /// Each entry is written to all index permutations. Two entries naming
    /// the same unordered index triple with different values are rejected.
    pub fn from_entries(n: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(GeomError::Precondition("cubic form needs n >= 1".into()));
        }
        let mut coeffs = vec![0.0; n * n * n];
        let mut seen: Vec<Option<f64>> = vec![None; n * n * n];
        for &(a, b, c, v) in entries {
            if a >= n || b >= n || c >= n {
                return Err(GeomError::Precondition(format!("cubic index ({a},{b},{c}) out of range for n = {n}")));
            }
            if !v.is_finite() {
                return Err(GeomError::Precondition(format!("cubic coefficient ({a},{b},{c}) is not finite")));
            }
            let mut key = [a, b, c];
            key.sort_unstable();
            let slot = key[0] * n * n + key[1] * n + key[2];
            match seen[slot] {
                Some(prev) if prev != v => {
                    return Err(GeomError::Precondition(format!(
                        "conflicting values {prev} and {v} for cubic coefficient {key:?}"
                    )))
                }
                _ => seen[slot] = Some(v),
            }
            for [i, j, k] in permutations(key) {
                coeffs[i * n * n + j * n + k] = v;
            }
        }
        Ok(Self { n, coeffs })
    }

    /// `h(x) = a (x¹)³`.
    pub fn single_cube(a: f64) -> Self {
        Self { n: 1, coeffs: vec![6.0 * a] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `h_{μνρ}`
    pub fn coeff(&self, a: usize, b: usize, c: usize) -> f64 {
        self.coeffs[a * self.n * self.n + b * self.n + c]
    }

    /// Nonzero coefficients with `μ ≤ ν ≤ ρ`.
    pub fn entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.n;
        let mut out = Vec::new();
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    let v = self.coeff(a, b, c);
                    if v != 0.0 {
                        out.push((a, b, c, v));
                    }
                }
            }
        }
        out
    }

    /// `h_{μν}(x) = Σ_ρ h_{μνρ} x^ρ`
    pub fn hessian<T: ComplexField<RealField = f64> + Copy>(&self, x: &[T]) -> DMatrix<T> {
        let n = self.n;
        DMatrix::from_fn(n, n, |a, b| (0..n).fold(T::zero(), |acc, c| acc + T::from_real(self.coeff(a, b, c)) * x[c]))
    }

    /// `h_μ(x) = (1/2) Σ h_{μνρ} x^ν x^ρ`
    pub fn gradient<T: ComplexField<RealField = f64> + Copy>(&self, x: &[T]) -> DVector<T> {
        let hess = self.hessian(x);
        let n = self.n;
        DVector::from_fn(n, |a, _| (0..n).fold(T::zero(), |acc, b| acc + hess[(a, b)] * x[b]) * T::from_real(0.5))
    }

    /// `h(x)`
    pub fn value<T: ComplexField<RealField = f64> + Copy>(&self, x: &[T]) -> T {
        let grad = self.gradient(x);
        (0..self.n).fold(T::zero(), |acc, a| acc + grad[a] * x[a]) * T::from_real(1.0 / 3.0)
    }

    /// Whether `x` lies in the hyperbolic cone of `h`: `h(x) > 0` and the
    /// Hessian of `h` has exactly one positive eigenvalue, none near zero.
    ///
    /// Since `∂²h(x, x) = 6h(x) > 0`, the latter is the same as `−∂²h` being
    /// positive definite on the `∂²h`-orthogonal complement of `x`.
    pub fn check_cone(&self, x: &[f64]) -> Result<()> {
        let h = self.value(x);
        if !(h > 0.0) {
            return Err(GeomError::Domain(format!("h(x) = {h} is not positive")));
        }
        let (pos, neg) = signature(&self.hessian(x), "cubic Hessian")?;
        if pos != 1 || neg != self.n - 1 {
            return Err(GeomError::Domain(format!(
                "cubic Hessian has signature ({pos},{neg}), expected (1,{})",
                self.n - 1
            )));
        }
        Ok(())
    }
}

fn permutations([a, b, c]: [usize; 3]) -> [[usize; 3]; 6] {
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// Number of positive and negative eigenvalues of a real symmetric matrix.
///
/// Fails if an eigenvalue is within [`SIGNATURE_TOL`] (relative) of zero.
pub fn signature(m: &DMatrix<f64>, what: &str) -> Result<(usize, usize)> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut pos = 0;
    let mut neg = 0;
    for &v in eig.eigenvalues.iter() {
        if v.abs() <= SIGNATURE_TOL * scale.max(1.0) {
            return Err(GeomError::ModelViolation(format!("{what} is degenerate (eigenvalue {v:e})")));
        }
        if v > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    Ok((pos, neg))
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrepotentialModel {
    /// `F = (i/2)((z⁰)² − Σ (z^μ)²)`, base `ℂHⁿ`.
    Quadratic { n: usize },
    /// `F = h(z¹…zⁿ)/z⁰`.
    VerySpecial(CubicForm),
}

impl PrepotentialModel {
    pub fn quadratic(n: usize) -> Self {
        Self::Quadratic { n }
    }

    pub fn very_special(h: CubicForm) -> Self {
        Self::VerySpecial(h)
    }

    /// Complex dimension of the special Kähler base.
    pub fn n(&self) -> usize {
        match self {
            Self::Quadratic { n } => *n,
            Self::VerySpecial(h) => h.n(),
        }
    }

    pub fn cubic(&self) -> Option<&CubicForm> {
        match self {
            Self::VerySpecial(h) => Some(h),
            Self::Quadratic { .. } => None,
        }
    }

    /// Checks that the inhomogeneous point `X` (with `X⁰ = 1`) lies in the
    /// model's base domain.
    pub fn check_base_point(&self, x: &DVector<Complex64>) -> Result<()> {
        if x.len() != self.n() {
            return Err(GeomError::Dimension { expected: self.n(), got: x.len() });
        }
        if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(GeomError::NonFinite { point: x.iter().flat_map(|v| [v.re, v.im]).collect() });
        }
        match self {
            Self::Quadratic { .. } => {
                let r2 = x.norm_squared();
                if r2 >= 1.0 {
                    return Err(GeomError::Domain(format!("|X|² = {r2} is not below 1")));
                }
                Ok(())
            }
            Self::VerySpecial(h) => {
                let im: Vec<f64> = x.iter().map(|v| v.im).collect();
                h.check_cone(&im)
            }
        }
    }
}

/// `F` and its holomorphic derivatives up to third order at `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepotentialJet {
    pub z: DVector<Complex64>,
    pub f: Complex64,
    pub f_i: DVector<Complex64>,
    pub f_ij: DMatrix<Complex64>,
    f_ijk: Vec<Complex64>,
}

impl PrepotentialJet {
    /// `F_IJK`
    pub fn third(&self, i: usize, j: usize, k: usize) -> Complex64 {
        let m = self.z.len();
        self.f_ijk[i * m * m + j * m + k]
    }
}

/// Evaluates the prepotential jet at a homogeneous point `z ∈ ℂ^{n+1}`.
pub fn eval_jet(model: &PrepotentialModel, z: &DVector<Complex64>) -> Result<PrepotentialJet> {
    let n = model.n();
    let m = n + 1;
    if z.len() != m {
        return Err(GeomError::Dimension { expected: m, got: z.len() });
    }
    let mut f_ijk = vec![Complex64::new(0.0, 0.0); m * m * m];
    match model {
        PrepotentialModel::Quadratic { .. } => {
            let half_i = i_unit() * 0.5;
            let f = half_i * (z[0] * z[0] - (1..m).map(|a| z[a] * z[a]).sum::<Complex64>());
            let f_i = DVector::from_fn(m, |a, _| if a == 0 { i_unit() * z[0] } else { -i_unit() * z[a] });
            let f_ij = DMatrix::from_fn(m, m, |a, b| match (a, b) {
                (0, 0) => i_unit(),
                (a, b) if a == b => -i_unit(),
                _ => Complex64::new(0.0, 0.0),
            });
            Ok(PrepotentialJet { z: z.clone(), f, f_i, f_ij, f_ijk })
        }
        PrepotentialModel::VerySpecial(h) => {
            let z0 = z[0];
            if z0.norm() == 0.0 {
                return Err(GeomError::Domain("z⁰ = 0 for a cubic prepotential".into()));
            }
            let w: Vec<Complex64> = z.iter().skip(1).copied().collect();
            let hv = h.value(&w);
            let hg = h.gradient(&w);
            let hh = h.hessian(&w);
            let inv = Complex64::new(1.0, 0.0) / z0;
            let inv2 = inv * inv;
            let inv3 = inv2 * inv;
            let inv4 = inv3 * inv;

            let f = hv * inv;
            let f_i = DVector::from_fn(m, |a, _| if a == 0 { -hv * inv2 } else { hg[a - 1] * inv });
            let f_ij = DMatrix::from_fn(m, m, |a, b| match (a, b) {
                (0, 0) => hv * inv3 * 2.0,
                (0, b) => -hg[b - 1] * inv2,
                (a, 0) => -hg[a - 1] * inv2,
                (a, b) => hh[(a - 1, b - 1)] * inv,
            });
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        let zeros = [a, b, c].iter().filter(|&&k| k == 0).count();
                        let rest: Vec<usize> = [a, b, c].iter().filter(|&&k| k != 0).map(|k| k - 1).collect();
                        f_ijk[a * m * m + b * m + c] = match zeros {
                            3 => -hv * inv4 * 6.0,
                            2 => hg[rest[0]] * inv3 * 2.0,
                            1 => -hh[(rest[0], rest[1])] * inv2,
                            _ => inv * h.coeff(rest[0], rest[1], rest[2]),
                        };
                    }
                }
            }
            Ok(PrepotentialJet { z: z.clone(), f, f_i, f_ij, f_ijk })
        }
    }
}

/// The real and complex matrices of special geometry at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialMatrices {
    /// `N_IJ = 2 Im F_IJ`, signature `(1, n)`.
    pub n: DMatrix<f64>,
    /// `N^IJ`, the inverse of `N`.
    pub n_inv: DMatrix<f64>,
    /// `f = Σ N_IJ z^I z̄^J > 0`.
    pub f: f64,
    /// `𝒩_IJ = F̄_IJ + i (Nz)_I (Nz)_J / (zᵀNz)`.
    pub script_n: DMatrix<Complex64>,
    /// `𝓡 = Re 𝒩`
    pub r: DMatrix<f64>,
    /// `𝓘 = Im 𝒩`, positive definite.
    pub imag: DMatrix<f64>,
    /// `𝓘⁻¹`
    pub imag_inv: DMatrix<f64>,
    /// Block matrix on `p = (ζ̃_I, ζ^I)`:
    /// `[[𝓘⁻¹, 𝓘⁻¹𝓡], [𝓡𝓘⁻¹, 𝓘 + 𝓡𝓘⁻¹𝓡]]`, positive definite.
    pub hhat: DMatrix<f64>,
    pub jet: PrepotentialJet,
}

/// Builds [`SpecialMatrices`] at `z`, verifying the signature of `N`, the
/// sign of `f` and the definiteness of `𝓘` and `Ĥ`.
pub fn special_matrices(model: &PrepotentialModel, z: &DVector<Complex64>) -> Result<SpecialMatrices> {
    let jet = eval_jet(model, z)?;
    let m = z.len();
    let n_mat = jet.f_ij.map(|v| 2.0 * v.im);
    let n_c = n_mat.map(|v| Complex64::new(v, 0.0));

    let f = (z.adjoint() * &n_c * z)[(0, 0)];
    // z̄ᵀ N z: the matrix is real symmetric so this is real
    let f = f.re;
    if !(f > 0.0) {
        return Err(GeomError::OutsideCone { f });
    }

    let n_inv = n_mat
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Singular { what: "N".into(), condition: f64::INFINITY })?;
    let (pos, neg) = signature(&n_mat, "N")?;
    if pos != 1 || neg != m - 1 {
        return Err(GeomError::ModelViolation(format!("N has signature ({pos},{neg}), expected (1,{})", m - 1)));
    }

    let nz = &n_c * z;
    let znz = (z.transpose() * &nz)[(0, 0)];
    if znz.norm() == 0.0 {
        return Err(GeomError::ModelViolation("zᵀNz vanishes".into()));
    }
    let script_n = DMatrix::from_fn(m, m, |a, b| jet.f_ij[(a, b)].conj() + i_unit() * nz[a] * nz[b] / znz);
    let r = script_n.map(|v| v.re);
    let imag = script_n.map(|v| v.im);
    let imag_min = min_eigenvalue(&imag);
    if !(imag_min > 0.0) {
        return Err(GeomError::ModelViolation(format!(
            "Im 𝒩 is not positive definite (smallest eigenvalue {imag_min:e})"
        )));
    }
    let imag_inv = imag
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Singular { what: "Im 𝒩".into(), condition: f64::INFINITY })?;

    let mut hhat = DMatrix::zeros(2 * m, 2 * m);
    let ir = &imag_inv * &r;
    let ri = &r * &imag_inv;
    let lower = &imag + &r * &imag_inv * &r;
    hhat.view_mut((0, 0), (m, m)).copy_from(&imag_inv);
    hhat.view_mut((0, m), (m, m)).copy_from(&ir);
    hhat.view_mut((m, 0), (m, m)).copy_from(&ri);
    hhat.view_mut((m, m), (m, m)).copy_from(&lower);
    let hhat = (&hhat + hhat.transpose()) * 0.5;
    let hhat_min = min_eigenvalue(&hhat);
    if !(hhat_min > 0.0) {
        return Err(GeomError::ModelViolation(format!(
            "Ĥ is not positive definite (smallest eigenvalue {hhat_min:e})"
        )));
    }

    Ok(SpecialMatrices { n: n_mat, n_inv, f, script_n, r, imag, imag_inv, hhat, jet })
}

/// Homogeneous coordinates `z = (1, X)` for an inhomogeneous point `X`.
pub fn homogeneous(x: &DVector<Complex64>) -> DVector<Complex64> {
    DVector::from_fn(x.len() + 1, |a, _| if a == 0 { Complex64::new(1.0, 0.0) } else { x[a - 1] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-13
    }

    #[test]
    fn quadratic_jet_at_origin() {
        let model = PrepotentialModel::quadratic(1);
        let jet = eval_jet(&model, &DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert!(close(jet.f, c(0.0, 0.5)));
        assert!(close(jet.f_i[0], c(0.0, 1.0)));
        assert!(close(jet.f_i[1], c(0.0, 0.0)));
        assert!(close(jet.f_ij[(0, 0)], c(0.0, 1.0)));
        assert!(close(jet.f_ij[(1, 1)], c(0.0, -1.0)));
        assert!(close(jet.f_ij[(0, 1)], c(0.0, 0.0)));
    }

    #[test]
    fn cubic_jet_of_x_cubed() {
        let model = PrepotentialModel::very_special(CubicForm::single_cube(1.0));
        let jet = eval_jet(&model, &DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        assert!(close(jet.f, c(1.0, 0.0)));
        assert!(close(jet.f_i[0], c(-1.0, 0.0)));
        assert!(close(jet.f_i[1], c(3.0, 0.0)));
        assert!(close(jet.f_ij[(0, 0)], c(2.0, 0.0)));
        assert!(close(jet.f_ij[(0, 1)], c(-3.0, 0.0)));
        assert!(close(jet.f_ij[(1, 1)], c(6.0, 0.0)));
        assert!(close(jet.third(1, 1, 1), c(6.0, 0.0)));
    }

    #[test]
    fn cubic_jet_rejects_vanishing_z0() {
        let model = PrepotentialModel::very_special(CubicForm::single_cube(1.0));
        let err = eval_jet(&model, &DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)])).unwrap_err();
        assert!(matches!(err, GeomError::Domain(_)));
    }

    #[test]
    fn quadratic_n0_matrices() {
        let model = PrepotentialModel::quadratic(0);
        let sm = special_matrices(&model, &DVector::from_vec(vec![c(1.0, 0.0)])).unwrap();
        assert_abs_diff_eq!(sm.n[(0, 0)], 2.0);
        assert_abs_diff_eq!(sm.f, 2.0);
        assert!(close(sm.script_n[(0, 0)], c(0.0, 1.0)));
        assert_abs_diff_eq!(sm.imag[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sm.r[(0, 0)], 0.0, epsilon = 1e-15);
        assert!((&sm.hhat - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    }

    #[test]
    fn x_cubed_matrices_at_i() {
        let model = PrepotentialModel::very_special(CubicForm::single_cube(1.0));
        let sm = special_matrices(&model, &DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)])).unwrap();
        let n_expected = DMatrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, 12.0]);
        assert!((&sm.n - n_expected).abs().max() < 1e-14);
        assert_abs_diff_eq!(sm.f, 8.0, epsilon = 1e-14);
        assert!(close(sm.script_n[(0, 0)], c(0.0, 1.0)));
        assert!(close(sm.script_n[(1, 1)], c(0.0, 3.0)));
        assert!(close(sm.script_n[(0, 1)], c(0.0, 0.0)));
        let hhat = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 / 3.0, 1.0, 3.0]));
        assert!((&sm.hhat - hhat).abs().max() < 1e-14);
    }

    #[test]
    fn outside_cone_is_reported() {
        let model = PrepotentialModel::quadratic(1);
        let err = special_matrices(&model, &DVector::from_vec(vec![c(1.0, 0.0), c(1.5, 0.0)])).unwrap_err();
        assert!(matches!(err, GeomError::OutsideCone { .. }));
    }

    #[test]
    fn conflicting_cubic_entries_are_rejected() {
        let err = CubicForm::from_entries(2, &[(0, 0, 1, 2.0), (1, 0, 0, 3.0)]).unwrap_err();
        assert!(matches!(err, GeomError::Precondition(_)));
        // repeated consistent entries are fine
        let h = CubicForm::from_entries(2, &[(0, 0, 1, 2.0), (0, 1, 0, 2.0)]).unwrap();
        assert_eq!(h.coeff(1, 0, 0), 2.0);
        assert_eq!(h.entries(), vec![(0, 0, 1, 2.0)]);
    }

    #[test]
    fn cubic_cone_membership() {
        let h = CubicForm::single_cube(1.0);
        assert!(h.check_cone(&[1.0]).is_ok());
        assert!(h.check_cone(&[-1.0]).is_err());
        // h = x1² x2: hyperbolic for x2 > 0, x1 != 0
        let h2 = CubicForm::from_entries(2, &[(0, 0, 1, 2.0)]).unwrap();
        assert_abs_diff_eq!(h2.value(&[2.0, 3.0]), 12.0, epsilon = 1e-14);
        assert!(h2.check_cone(&[1.0, 1.0]).is_ok());
        assert!(h2.check_cone(&[1.0, -1.0]).is_err());
    }
}
