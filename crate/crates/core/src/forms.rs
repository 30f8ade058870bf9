//! One- and two-form algebra in a fixed chart.
//!
//! One-forms are coefficient vectors. Two-forms are antisymmetric matrices
//! with `Ω_ij = ω(∂_i, ∂_j)`, so `α∧β = α⊗β − β⊗α`. Symmetric products are
//! `αβ = ½(α⊗β + β⊗α)` and, for complex one-forms, `|ν|² = ν ν̄ =
//! (Re ν)² + (Im ν)²`.
//!
//! An almost complex structure `J` acts on vectors as a matrix; the
//! associated two-form is `ω(u, v) = g(Ju, v)`, i.e. `Ω = Jᵀ G` and
//! `J = −G⁻¹ Ω`.

use nalgebra::{DMatrix, DVector};

use crate::diff::Complex64;
use crate::error::{GeomError, Result};

pub fn wedge(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose() - b * a.transpose()
}

pub fn wedge_complex(a: &DVector<Complex64>, b: &DVector<Complex64>) -> DMatrix<Complex64> {
    a * b.transpose() - b * a.transpose()
}

/// `αβ = ½(α⊗β + β⊗α)`
pub fn sym(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    (a * b.transpose() + b * a.transpose()) * 0.5
}

/// `α² = α⊗α`
pub fn square(a: &DVector<f64>) -> DMatrix<f64> {
    a * a.transpose()
}

/// `|ν|² = (Re ν)² + (Im ν)²`
pub fn abs2(nu: &DVector<Complex64>) -> DMatrix<f64> {
    let re = nu.map(|v| v.re);
    let im = nu.map(|v| v.im);
    square(&re) + square(&im)
}

/// `Σ H^{IJ} A_I Ā_J` as a real symmetric bilinear form, for real symmetric `H`.
pub fn hermitian_sum(h: &DMatrix<f64>, forms: &[DVector<Complex64>]) -> DMatrix<f64> {
    let d = forms.first().map_or(0, |f| f.len());
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for (i, a) in forms.iter().enumerate() {
        for (j, b) in forms.iter().enumerate() {
            let w = h[(i, j)];
            if w != 0.0 {
                out += (a * b.map(|v| v.conj()).transpose()) * Complex64::new(w, 0.0);
            }
        }
    }
    let re = out.map(|v| v.re);
    (&re + re.transpose()) * 0.5
}

/// `Σ H^{IJ} A_I ∧ Ā_J` as a complex two-form.
pub fn hermitian_wedge(h: &DMatrix<f64>, forms: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    let d = forms.first().map_or(0, |f| f.len());
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for (i, a) in forms.iter().enumerate() {
        for (j, b) in forms.iter().enumerate() {
            let w = h[(i, j)];
            if w != 0.0 {
                out += wedge_complex(a, &b.map(|v| v.conj())) * Complex64::new(w, 0.0);
            }
        }
    }
    out
}

/// Real part of a complex two-form, failing if the imaginary part is not
/// negligible.
pub fn real_form(m: &DMatrix<Complex64>, tol: f64) -> Result<DMatrix<f64>> {
    let im = m.map(|v| v.im).abs().max();
    let scale = m.map(|v| v.re).abs().max().max(1.0);
    if im > tol * scale {
        return Err(GeomError::Assembly(format!("two-form has imaginary part {im:e}")));
    }
    Ok(m.map(|v| v.re))
}

/// `J = −G⁻¹Ω`, the endomorphism with `ω(u, v) = g(Ju, v)`.
pub fn structure_from_form(g: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Singular { what: "metric".into(), condition: f64::INFINITY })?;
    Ok(-(ginv * omega))
}

/// `Ω = Jᵀ G`, the two-form `g(J·, ·)`.
pub fn form_from_structure(g: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    j.transpose() * g
}

/// The almost complex structure whose `(1,0)`-forms are spanned by `coframe`.
///
/// `coframe` must hold `d/2` complex covectors that together with their
/// conjugates form a basis of the complexified cotangent space. The result
/// satisfies `θ ∘ J = iθ` for every `θ` in the coframe.
pub fn structure_from_coframe(coframe: &[DVector<Complex64>]) -> Result<DMatrix<f64>> {
    let half = coframe.len();
    let d = 2 * half;
    let mut p = DMatrix::<Complex64>::zeros(d, d);
    for (r, th) in coframe.iter().enumerate() {
        if th.len() != d {
            return Err(GeomError::Dimension { expected: d, got: th.len() });
        }
        for c in 0..d {
            p[(r, c)] = th[c];
            p[(half + r, c)] = th[c].conj();
        }
    }
    let pinv = p
        .clone()
        .try_inverse()
        .ok_or_else(|| GeomError::Singular { what: "holomorphic coframe".into(), condition: f64::INFINITY })?;
    let diag = DMatrix::from_fn(d, d, |a, b| {
        if a != b {
            Complex64::new(0.0, 0.0)
        } else if a < half {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(0.0, -1.0)
        }
    });
    let j = pinv * diag * p;
    let im = j.map(|v| v.im).abs().max();
    if im > 1e-8 * j.map(|v| v.re).abs().max().max(1.0) {
        return Err(GeomError::Assembly(format!("coframe does not define a real structure (imaginary part {im:e})")));
    }
    Ok(j.map(|v| v.re))
}

/// `α∧Ω` for a one-form `α` and two-form `Ω`, as the antisymmetric array
/// `α_i Ω_jk + α_j Ω_ki + α_k Ω_ij` flattened as `[i·d² + j·d + k]`.
pub fn wedge_one_two(a: &DVector<f64>, omega: &DMatrix<f64>) -> Vec<f64> {
    let d = a.len();
    let mut out = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                out[i * d * d + j * d + k] = a[i] * omega[(j, k)] + a[j] * omega[(k, i)] + a[k] * omega[(i, j)];
            }
        }
    }
    out
}

/// Coefficient of `dx^i∧dx^j∧dx^k∧dx^l` in `α∧β` for two-forms `α`, `β`.
pub fn four_form_component(a: &DMatrix<f64>, b: &DMatrix<f64>, [i, j, k, l]: [usize; 4]) -> f64 {
    let pair =
        |x: &DMatrix<f64>, y: &DMatrix<f64>| x[(i, j)] * y[(k, l)] - x[(i, k)] * y[(j, l)] + x[(i, l)] * y[(j, k)];
    pair(a, b) + pair(b, a)
}
