//! The supergravity c-map and its one-loop deformation.
//!
//! The total space has real dimension `4n + 4` with the chart ordering
//!
//! ```text
//! (y¹..yⁿ, x¹..xⁿ, ρ, φ̃, ζ̃₀..ζ̃ₙ, ζ⁰..ζⁿ)
//! ```
//!
//! used by every matrix and form in this module. The fibre coordinates
//! `p = (ζ̃_I, ζ^I)` are contiguous, in the same order as the blocks of `Ĥ`.

pub mod chn;
pub mod frames;
pub mod holo;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::diff::{Complex64, MetricField};
use crate::error::{GeomError, Result};
use crate::forms::{abs2, square};
use crate::prepotential::{special_matrices, PrepotentialModel, SpecialMatrices};
use crate::special_kahler::{base_metric, dc_potential, PskPoint};

pub use chn::chn_closed_form;
pub use frames::{
    d_kahler_form_one, frame_form_metric, frame_forms, kahler_form_one, kahler_forms, pairing_identity,
    quaternion_check, structure_equation_residual, FrameForms, KahlerForms, QuaternionCheck,
};
pub use holo::{holomorphic_coframe, holomorphic_coords, structure_from_holomorphic_coords, HoloCoords};

/// Index layout of the `4n + 4` dimensional chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
}

impl Layout {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
    pub fn dim(&self) -> usize {
        4 * self.n + 4
    }
    pub fn y(&self, mu: usize) -> usize {
        mu
    }
    pub fn x(&self, mu: usize) -> usize {
        self.n + mu
    }
    pub fn rho(&self) -> usize {
        2 * self.n
    }
    pub fn phi(&self) -> usize {
        2 * self.n + 1
    }
    pub fn zeta_t(&self, i: usize) -> usize {
        2 * self.n + 2 + i
    }
    pub fn zeta(&self, i: usize) -> usize {
        3 * self.n + 3 + i
    }
    /// First index of the fibre block `p = (ζ̃, ζ)`.
    pub fn fibre_start(&self) -> usize {
        2 * self.n + 2
    }
    /// Unit covector `dx^i`.
    pub fn unit(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[i] = 1.0;
        v
    }
    /// Extends a base covector on `(y, x)` by zeros.
    pub fn pad_base(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, 2 * self.n).copy_from(v);
        out
    }
    /// Extends a base matrix on `(y, x)` by zeros.
    pub fn pad_base_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        out.view_mut((0, 0), (2 * self.n, 2 * self.n)).copy_from(m);
        out
    }
}

/// A point of the total space.
#[derive(Debug, Clone, PartialEq)]
pub struct QkPoint {
    pub base: PskPoint,
    pub rho: f64,
    pub phi: f64,
    pub zeta_t: DVector<f64>,
    pub zeta: DVector<f64>,
}

impl QkPoint {
    pub fn new(base: PskPoint, rho: f64, phi: f64, zeta_t: DVector<f64>, zeta: DVector<f64>) -> Result<Self> {
        let m = base.n() + 1;
        for v in [&zeta_t, &zeta] {
            if v.len() != m {
                return Err(GeomError::Dimension { expected: m, got: v.len() });
            }
        }
        let all = [rho, phi].into_iter().chain(zeta_t.iter().copied()).chain(zeta.iter().copied());
        if all.clone().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite { point: all.collect() });
        }
        Ok(Self { base, rho, phi, zeta_t, zeta })
    }

    pub fn from_chart(model: &PrepotentialModel, chart: &[f64]) -> Result<Self> {
        let lay = Layout::new(model.n());
        if chart.len() != lay.dim() {
            return Err(GeomError::Dimension { expected: lay.dim(), got: chart.len() });
        }
        let n = lay.n;
        let base = PskPoint::from_chart(model, &chart[..2 * n])?;
        Self::new(
            base,
            chart[lay.rho()],
            chart[lay.phi()],
            DVector::from_fn(n + 1, |i, _| chart[lay.zeta_t(i)]),
            DVector::from_fn(n + 1, |i, _| chart[lay.zeta(i)]),
        )
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.base.n())
    }

    pub fn chart(&self) -> Vec<f64> {
        let mut out = self.base.chart();
        out.push(self.rho);
        out.push(self.phi);
        out.extend(self.zeta_t.iter());
        out.extend(self.zeta.iter());
        out
    }

    /// `η_can = Σ (ζ^I dζ̃_I − ζ̃_I dζ^I)`
    pub fn eta_can(&self) -> DVector<f64> {
        let lay = self.layout();
        let mut v = DVector::zeros(lay.dim());
        for i in 0..=lay.n {
            v[lay.zeta_t(i)] = self.zeta[i];
            v[lay.zeta(i)] = -self.zeta_t[i];
        }
        v
    }
}

/// The one-loop parameter `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation(pub f64);

impl Deformation {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// The signature branches of the deformed metric in the `ρ` direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainBranch {
    /// `ρ > −2c, ρ > 0`: positive definite, signature `(4n+4, 0)`.
    PosDef,
    /// `−c < ρ < −2c`: signature `(4n, 4)`.
    Sig4n4,
    /// `−c < ρ < 0`: signature `(4, 4n)`.
    Sig44n,
    Outside,
}

impl DomainBranch {
    pub fn label(&self) -> &'static str {
        match self {
            Self::PosDef => "PosDef(4n+4,0)",
            Self::Sig4n4 => "Sig(4n,4)",
            Self::Sig44n => "Sig(4,4n)",
            Self::Outside => "Outside",
        }
    }
}

pub fn domain_classify(c: f64, rho: f64) -> DomainBranch {
    if rho > 0.0 && rho > -2.0 * c {
        DomainBranch::PosDef
    } else if -c < rho && rho < -2.0 * c {
        DomainBranch::Sig4n4
    } else if -c < rho && rho < 0.0 {
        DomainBranch::Sig44n
    } else {
        DomainBranch::Outside
    }
}

/// `Σ_I (X^I dζ̃_I + F_I(X) dζ^I)` with `X⁰ = 1`.
pub(crate) fn pairing_form(q: &QkPoint, sm: &SpecialMatrices) -> DVector<Complex64> {
    let lay = q.layout();
    let z = q.base.homogeneous();
    let mut v = DVector::from_element(lay.dim(), Complex64::new(0.0, 0.0));
    for i in 0..=lay.n {
        v[lay.zeta_t(i)] = z[i];
        v[lay.zeta(i)] = sm.jet.f_i[i];
    }
    v
}

fn check_positive_definite(g: &DMatrix<f64>) -> Result<()> {
    if g.clone().cholesky().is_none() {
        let min = SymmetricEigen::new(g.clone()).eigenvalues.min();
        return Err(GeomError::Assembly(format!("metric is not positive definite (smallest eigenvalue {min:e})")));
    }
    Ok(())
}

/// The one-loop deformed Ferrara-Sabharwal metric, assembled term by term:
///
/// ```text
/// g^c = (ρ+c)/ρ ḡ + 1/(4ρ²) (ρ+2c)/(ρ+c) dρ²
///     + 1/(4ρ²) (ρ+c)/(ρ+2c) (dφ̃ + η_can + c d^c𝒦)²
///     + 1/(2ρ) Σ dp_a Ĥ^{ab} dp_b
///     + 2c/ρ² e^𝒦 |Σ X^I dζ̃_I + F_I(X) dζ^I|²
/// ```
///
/// Only the positive definite branch is assembled.
pub fn deformed_fs_metric(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<DMatrix<f64>> {
    let c = c.value();
    let rho = q.rho;
    if domain_classify(c, rho) != DomainBranch::PosDef {
        return Err(GeomError::Domain(format!("(c, ρ) = ({c}, {rho}) is not in the positive definite branch")));
    }
    let lay = q.layout();
    let sm = special_matrices(model, &q.base.homogeneous())?;
    let gbar = base_metric(model, &q.base)?.matrix;
    let dc = lay.pad_base(&dc_potential(model, &q.base)?);

    let mut g = lay.pad_base_matrix(&gbar) * ((rho + c) / rho);
    g += square(&lay.unit(lay.rho())) * ((rho + 2.0 * c) / (rho + c) / (4.0 * rho * rho));

    let theta = lay.unit(lay.phi()) + q.eta_can() + dc * c;
    g += square(&theta) * ((rho + c) / (rho + 2.0 * c) / (4.0 * rho * rho));

    let m = 2 * lay.n + 2;
    let s = lay.fibre_start();
    let mut fibre = g.view_mut((s, s), (m, m));
    fibre += &sm.hhat * (0.5 / rho);

    if c != 0.0 {
        let pairing = pairing_form(q, &sm);
        g += abs2(&pairing) * (2.0 * c / (rho * rho) / sm.f);
    }

    let g = (&g + g.transpose()) * 0.5;
    check_positive_definite(&g)?;
    Ok(g)
}

/// The undeformed Ferrara-Sabharwal metric
/// `ḡ + dρ²/(4ρ²) + (dφ̃ + η_can)²/(4ρ²) + (1/2ρ) Σ dp Ĥ dp`.
pub fn fs_metric(model: &PrepotentialModel, q: &QkPoint) -> Result<DMatrix<f64>> {
    let rho = q.rho;
    if !(rho > 0.0) {
        return Err(GeomError::Domain(format!("ρ = {rho} is not positive")));
    }
    let lay = q.layout();
    let sm = special_matrices(model, &q.base.homogeneous())?;
    let gbar = base_metric(model, &q.base)?.matrix;
    let mut g = lay.pad_base_matrix(&gbar);
    g += square(&lay.unit(lay.rho())) / (4.0 * rho * rho);
    g += square(&(lay.unit(lay.phi()) + q.eta_can())) / (4.0 * rho * rho);
    let m = 2 * lay.n + 2;
    let s = lay.fibre_start();
    let mut fibre = g.view_mut((s, s), (m, m));
    fibre += &sm.hhat * (0.5 / rho);
    let g = (&g + g.transpose()) * 0.5;
    check_positive_definite(&g)?;
    Ok(g)
}

/// `(m, ρ, φ̃, ζ̃, ζ) ↦ (m, e^λ ρ, e^λ φ̃, e^{λ/2} ζ̃, e^{λ/2} ζ)`.
pub fn scaling_map(lambda: f64, q: &QkPoint) -> QkPoint {
    let e = lambda.exp();
    let e2 = (0.5 * lambda).exp();
    QkPoint { base: q.base.clone(), rho: e * q.rho, phi: e * q.phi, zeta_t: &q.zeta_t * e2, zeta: &q.zeta * e2 }
}

/// The (diagonal) Jacobian of [`scaling_map`] in the chart.
pub fn scaling_jacobian(lambda: f64, n: usize) -> DMatrix<f64> {
    let lay = Layout::new(n);
    let mut d = DVector::from_element(lay.dim(), 1.0);
    d[lay.rho()] = lambda.exp();
    d[lay.phi()] = lambda.exp();
    for i in 0..=n {
        d[lay.zeta_t(i)] = (0.5 * lambda).exp();
        d[lay.zeta(i)] = (0.5 * lambda).exp();
    }
    DMatrix::from_diagonal(&d)
}

/// Smallest eigenvalue of `g^c − ½ (kε/(kε + c)) g⁰` at `q`.
///
/// Requires `ρ > ε`; the caller is responsible for `ḡ ≥ (k/4)(d^c𝒦)²` at the
/// base point.
pub fn lower_bound_gap(model: &PrepotentialModel, c: Deformation, epsilon: f64, k: f64, q: &QkPoint) -> Result<f64> {
    if !(q.rho > epsilon) {
        return Err(GeomError::Precondition(format!("ρ = {} is not above ε = {epsilon}", q.rho)));
    }
    if !(epsilon > 0.0 && k > 0.0) {
        return Err(GeomError::Precondition("ε and k must be positive".into()));
    }
    let cv = c.value();
    let delta = 0.5 * (k * epsilon) / (k * epsilon + cv);
    let gc = deformed_fs_metric(model, c, q)?;
    let g0 = deformed_fs_metric(model, Deformation(0.0), q)?;
    Ok(SymmetricEigen::new(gc - g0 * delta).eigenvalues.min())
}

/// `g^c` as a [`MetricField`] on the `4n + 4` chart.
#[derive(Debug, Clone)]
pub struct DeformedFsField {
    pub model: PrepotentialModel,
    pub c: Deformation,
}

impl DeformedFsField {
    pub fn new(model: PrepotentialModel, c: f64) -> Self {
        Self { model, c: Deformation(c) }
    }
}

impl MetricField for DeformedFsField {
    fn dim(&self) -> usize {
        Layout::new(self.model.n()).dim()
    }
    fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let q = QkPoint::from_chart(&self.model, p)?;
        deformed_fs_metric(&self.model, self.c, &q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prepotential::CubicForm;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn n0_undeformed_at_rho_one() {
        let m = PrepotentialModel::quadratic(0);
        let q = QkPoint::from_chart(&m, &[1.0, 0.3, 0.0, 0.0]).unwrap();
        let g = deformed_fs_metric(&m, Deformation(0.0), &q).unwrap();
        assert!((g - diag(&[0.25, 0.25, 0.5, 0.5])).abs().max() < 1e-15);
    }

    #[test]
    fn n0_deformed_at_rho_one() {
        let m = PrepotentialModel::quadratic(0);
        let q = QkPoint::from_chart(&m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let g = deformed_fs_metric(&m, Deformation(1.0), &q).unwrap();
        assert!((g - diag(&[3.0 / 8.0, 1.0 / 6.0, 1.5, 1.5])).abs().max() < 1e-15);
    }

    #[test]
    fn c_zero_reduces_to_fs() {
        let m = PrepotentialModel::very_special(CubicForm::single_cube(1.0));
        let q = QkPoint::from_chart(&m, &[0.4, 1.3, 0.7, -0.2, 0.5, -1.0, 0.3, 0.8]).unwrap();
        let a = deformed_fs_metric(&m, Deformation(0.0), &q).unwrap();
        let b = fs_metric(&m, &q).unwrap();
        assert!((&a - &b).abs().max() <= 1e-15 * b.abs().max());
    }

    #[test]
    fn indefinite_branches_are_not_assembled() {
        let m = PrepotentialModel::quadratic(0);
        let q = QkPoint::from_chart(&m, &[1.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(deformed_fs_metric(&m, Deformation(-1.0), &q), Err(GeomError::Domain(_))));
    }

    #[test]
    fn domain_branches() {
        assert_eq!(domain_classify(1.0, 3.0), DomainBranch::PosDef);
        assert_eq!(domain_classify(-1.0, 1.5), DomainBranch::Sig4n4);
        assert_eq!(domain_classify(1.0, -0.5), DomainBranch::Sig44n);
        assert_eq!(domain_classify(0.0, 1.0), DomainBranch::PosDef);
        assert_eq!(domain_classify(0.0, -1.0), DomainBranch::Outside);
        assert_eq!(domain_classify(-1.0, 2.5), DomainBranch::PosDef);
        assert_eq!(domain_classify(1.0, -2.0), DomainBranch::Outside);
    }

    #[test]
    fn scaling_map_values() {
        let m = PrepotentialModel::quadratic(0);
        let q = QkPoint::from_chart(&m, &[1.0, 1.0, 1.0, 0.0]).unwrap();
        let s = scaling_map(2.0f64.ln(), &q);
        let expected = [2.0, 2.0, 2.0f64.sqrt(), 0.0];
        for (a, b) in s.chart().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(scaling_map(0.0, &q), q);
    }

    #[test]
    fn lower_bound_requires_rho_above_epsilon() {
        let m = PrepotentialModel::quadratic(0);
        let q = QkPoint::from_chart(&m, &[0.4, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(lower_bound_gap(&m, Deformation(1.0), 0.5, 1.0 / 3.0, &q), Err(GeomError::Precondition(_))));
    }

    #[test]
    fn lower_bound_at_c_zero_is_half_the_metric() {
        let m = PrepotentialModel::quadratic(1);
        let q = QkPoint::from_chart(&m, &[0.2, -0.1, 1.2, 0.3, 0.1, 0.2, -0.4, 0.5]).unwrap();
        let gap = lower_bound_gap(&m, Deformation(0.0), 0.5, 1.0, &q).unwrap();
        let g0 = deformed_fs_metric(&m, Deformation(0.0), &q).unwrap();
        let half_min = 0.5 * SymmetricEigen::new(g0).eigenvalues.min();
        assert!((gap - half_min).abs() < 1e-14);
    }

    #[test]
    fn chart_roundtrip() {
        let m = PrepotentialModel::quadratic(1);
        let c = [0.2, -0.1, 1.2, 0.3, 0.1, 0.2, -0.4, 0.5];
        assert_eq!(QkPoint::from_chart(&m, &c).unwrap().chart(), c.to_vec());
        assert!(QkPoint::from_chart(&m, &c[..7]).is_err());
    }
}
