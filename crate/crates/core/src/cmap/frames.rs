//! Frame one-forms `θ_i`, the Kähler two-forms `ω_i` and the identities
//! relating them to the deformed metric.

use nalgebra::{DMatrix, DVector};

use super::{Deformation, QkPoint};
use crate::diff::{exterior_derivative, exterior_derivative_two_form, Complex64};
use crate::error::{GeomError, Result};
use crate::forms::{
    abs2, hermitian_sum, hermitian_wedge, real_form, structure_from_form, wedge, wedge_complex, wedge_one_two,
};
use crate::prepotential::{special_matrices, PrepotentialModel, SpecialMatrices};
use crate::special_kahler::{base_kahler_form, base_metric, dc_potential};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Frame data at a point, all as coefficient vectors in the `4n + 4` chart.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameForms {
    pub theta: [DVector<f64>; 3],
    pub tau: DVector<Complex64>,
    /// `A_I = dζ̃_I + Σ_J F_IJ dζ^J`
    pub a: Vec<DVector<Complex64>>,
    pub eta_can: DVector<f64>,
    /// `Σ X^I A_I`
    pub xa: DVector<Complex64>,
}

/// The three Kähler two-forms `ω_i = −dθ_i + 2 θ_j∧θ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerForms {
    pub omega: [DMatrix<f64>; 3],
}

impl KahlerForms {
    /// `J_i = −g⁻¹ω_i`, so that `ω_i(u, v) = g(J_i u, v)`.
    pub fn structures(&self, g: &DMatrix<f64>) -> Result<[DMatrix<f64>; 3]> {
        Ok([
            structure_from_form(g, &self.omega[0])?,
            structure_from_form(g, &self.omega[1])?,
            structure_from_form(g, &self.omega[2])?,
        ])
    }
}

fn check_frame_domain(c: f64, rho: f64) -> Result<()> {
    if !(rho + c > 0.0) || rho == 0.0 || rho + 2.0 * c == 0.0 {
        return Err(GeomError::Domain(format!(
            "frame forms need ρ + c > 0 and ρ, ρ + 2c nonzero; got (c, ρ) = ({c}, {rho})"
        )));
    }
    Ok(())
}

fn a_forms(q: &QkPoint, sm: &SpecialMatrices) -> Vec<DVector<Complex64>> {
    let lay = q.layout();
    (0..=lay.n)
        .map(|i| {
            let mut v = DVector::from_element(lay.dim(), Complex64::new(0.0, 0.0));
            v[lay.zeta_t(i)] = Complex64::new(1.0, 0.0);
            for j in 0..=lay.n {
                v[lay.zeta(j)] = sm.jet.f_ij[(i, j)];
            }
            v
        })
        .collect()
}

fn combine(z: &DVector<Complex64>, forms: &[DVector<Complex64>]) -> DVector<Complex64> {
    let d = forms[0].len();
    forms.iter().zip(z.iter()).fold(DVector::from_element(d, Complex64::new(0.0, 0.0)), |acc, (f, w)| acc + f * *w)
}

fn real_vec(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// `θ₁ = −(1/4ρ)(dφ̃ + (ρ+c) d^c𝒦 + s·η_can)`; `s = +1` is the consistent sign.
pub(crate) fn theta_one(q: &QkPoint, c: f64, dc: &DVector<f64>, eta_sign: f64) -> DVector<f64> {
    let lay = q.layout();
    let rho = q.rho;
    (lay.unit(lay.phi()) + dc * (rho + c) + q.eta_can() * eta_sign) * (-0.25 / rho)
}

pub(crate) fn frame_forms_signed(
    model: &PrepotentialModel,
    c: Deformation,
    q: &QkPoint,
    eta_sign: f64,
) -> Result<FrameForms> {
    let c = c.value();
    let rho = q.rho;
    check_frame_domain(c, rho)?;
    let lay = q.layout();
    let z = q.base.homogeneous();
    let sm = special_matrices(model, &z)?;
    let dc = lay.pad_base(&dc_potential(model, &q.base)?);
    let eta = q.eta_can();

    let a = a_forms(q, &sm);
    let xa = combine(&z, &a);
    // e^{𝒦/2} = f^{-1/2}
    let t23 = &xa * (I * ((rho + c).sqrt() / rho / sm.f.sqrt()));
    let theta1 = theta_one(q, c, &dc, eta_sign);
    let tau = real_vec(&(lay.unit(lay.phi()) + &eta + &dc * c))
        + real_vec(&lay.unit(lay.rho())) * (I * ((rho + 2.0 * c) / (rho + c)));

    Ok(FrameForms { theta: [theta1, t23.map(|v| v.re), t23.map(|v| v.im)], tau, a, eta_can: eta, xa })
}

/// The frame one-forms at `q`.
pub fn frame_forms(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<FrameForms> {
    frame_forms_signed(model, c, q, 1.0)
}

/// `((ρ+c)/ρ) ḡ + 1/(4ρ²) (ρ+c)/(ρ+2c) |τ|² − (1/ρ) Σ N^{IJ} A_I Ā_J
/// + ((2ρ+2c)/ρ²) e^𝒦 |Σ X^I A_I|²`
pub fn frame_form_metric(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<DMatrix<f64>> {
    let ff = frame_forms(model, c, q)?;
    let (c, rho) = (c.value(), q.rho);
    let lay = q.layout();
    let sm = special_matrices(model, &q.base.homogeneous())?;
    let gbar = base_metric(model, &q.base)?.matrix;
    let mut g = lay.pad_base_matrix(&gbar) * ((rho + c) / rho);
    g += abs2(&ff.tau) * ((rho + c) / (rho + 2.0 * c) / (4.0 * rho * rho));
    g -= hermitian_sum(&sm.n_inv, &ff.a) / rho;
    g += abs2(&ff.xa) * ((2.0 * rho + 2.0 * c) / (rho * rho) / sm.f);
    Ok((&g + g.transpose()) * 0.5)
}

/// Both sides of `Σ i N^{IJ} A_I∧Ā_J = Σ dζ̃_I∧dζ^I`.
pub fn pairing_identity(model: &PrepotentialModel, q: &QkPoint) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let lay = q.layout();
    let sm = special_matrices(model, &q.base.homogeneous())?;
    let a = a_forms(q, &sm);
    let lhs = real_form(&(hermitian_wedge(&sm.n_inv, &a) * I), 1e-10)?;
    let mut rhs = DMatrix::zeros(lay.dim(), lay.dim());
    for i in 0..=lay.n {
        rhs += wedge(&lay.unit(lay.zeta_t(i)), &lay.unit(lay.zeta(i)));
    }
    Ok((lhs, rhs))
}

/// `ω₁` from its expanded expression
///
/// ```text
/// ω₁ = (ρ+c)/ρ · ¼dd^c𝒦 + (i/2) 1/(4ρ²) (ρ+c)/(ρ+2c) τ∧τ̄
///    − (i/2)(1/ρ) Σ N^{IJ} A_I∧Ā_J + (i/2) (2ρ+2c)/ρ² e^𝒦 (ΣX^I A_I)∧(ΣX̄^J Ā_J)
/// ```
///
/// with `¼dd^c𝒦 = ḡ(J·, ·)` taken from the base metric.
pub fn kahler_form_one(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<DMatrix<f64>> {
    let ff = frame_forms(model, c, q)?;
    let (c, rho) = (c.value(), q.rho);
    let lay = q.layout();
    let sm = special_matrices(model, &q.base.homogeneous())?;
    let conj = |v: &DVector<Complex64>| v.map(|x| x.conj());

    let mut cx =
        wedge_complex(&ff.tau, &conj(&ff.tau)) * Complex64::new((rho + c) / (rho + 2.0 * c) / (4.0 * rho * rho), 0.0);
    cx -= hermitian_wedge(&sm.n_inv, &ff.a) / Complex64::new(rho, 0.0);
    cx += wedge_complex(&ff.xa, &conj(&ff.xa)) * Complex64::new((2.0 * rho + 2.0 * c) / (rho * rho) / sm.f, 0.0);
    let fibre = real_form(&(cx * (I * 0.5)), 1e-10)?;

    let base = lay.pad_base_matrix(&base_kahler_form(model, &q.base)?) * ((rho + c) / rho);
    Ok(base + fibre)
}

fn kahler_forms_signed(model: &PrepotentialModel, c: Deformation, q: &QkPoint, eta_sign: f64) -> Result<KahlerForms> {
    let ff = frame_forms_signed(model, c, q, eta_sign)?;
    let p = q.chart();
    let d_theta = |k: usize| {
        exterior_derivative(
            &|x: &[f64]| {
                let qq = QkPoint::from_chart(model, x)?;
                Ok(frame_forms_signed(model, c, &qq, eta_sign)?.theta[k].clone())
            },
            &p,
        )
    };
    let th = &ff.theta;
    let omega = [
        -d_theta(0)? + wedge(&th[1], &th[2]) * 2.0,
        -d_theta(1)? + wedge(&th[2], &th[0]) * 2.0,
        -d_theta(2)? + wedge(&th[0], &th[1]) * 2.0,
    ];
    Ok(KahlerForms { omega })
}

/// `ω_i = −dθ_i + 2θ_j∧θ_k` for cyclic `(i, j, k)`, with `dθ_i` by finite
/// differences.
pub fn kahler_forms(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<KahlerForms> {
    kahler_forms_signed(model, c, q, 1.0)
}

/// `dω₁` by finite differences of [`kahler_form_one`], flattened as
/// `[i·d² + j·d + k]`.
pub fn d_kahler_form_one(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<Vec<f64>> {
    exterior_derivative_two_form(&|x: &[f64]| kahler_form_one(model, c, &QkPoint::from_chart(model, x)?), &q.chart())
}

/// `max |dω₁ − 2(θ₂∧ω₃ − θ₃∧ω₂)|`.
///
/// `ω₁` is not closed; its differential is fixed by the structure equations
/// of the triple `ω_i = −dθ_i + 2θ_j∧θ_k`.
pub fn structure_equation_residual(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<f64> {
    let d_omega = d_kahler_form_one(model, c, q)?;
    let ff = frame_forms(model, c, q)?;
    let kf = kahler_forms(model, c, q)?;
    let a = wedge_one_two(&ff.theta[1], &kf.omega[2]);
    let b = wedge_one_two(&ff.theta[2], &kf.omega[1]);
    Ok(d_omega.iter().zip(a.iter().zip(&b)).fold(0.0, |m, (dw, (x, y))| m.max((dw - 2.0 * (x - y)).abs())))
}

/// Residuals of the quaternion relations for a triple of endomorphisms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuaternionCheck {
    /// `max_i max|J_i² + Id|`
    pub square_residual: f64,
    /// Best fit of `J₁J₂ = σJ₃`.
    pub sigma: f64,
    /// `max|J₁J₂ − σJ₃|`
    pub product_residual: f64,
}

pub fn quaternion_check(js: &[DMatrix<f64>; 3]) -> QuaternionCheck {
    let d = js[0].nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let square_residual = js.iter().map(|j| (j * j + &id).abs().max()).fold(0.0, f64::max);
    let prod = &js[0] * &js[1];
    let sigma = prod.dot(&js[2]) / js[2].dot(&js[2]);
    let product_residual = (prod - &js[2] * sigma).abs().max();
    QuaternionCheck { square_residual, sigma, product_residual }
}
