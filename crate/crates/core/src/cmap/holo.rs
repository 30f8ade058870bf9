//! Holomorphic coordinates `(χ, X^μ, w_I)` for the first complex structure.

use nalgebra::{DMatrix, DVector};

use super::{Deformation, QkPoint};
use crate::diff::{complex_gradient, Complex64};
use crate::error::{GeomError, Result};
use crate::forms::structure_from_coframe;
use crate::prepotential::{eval_jet, PrepotentialModel};
use crate::special_kahler::kahler_potential;

#[derive(Debug, Clone, PartialEq)]
pub struct HoloCoords {
    pub chi: Complex64,
    pub x: DVector<Complex64>,
    pub w: DVector<Complex64>,
}

impl HoloCoords {
    /// `(χ, X¹..Xⁿ, w₀..wₙ)` as one list.
    pub fn values(&self) -> Vec<Complex64> {
        std::iter::once(self.chi).chain(self.x.iter().copied()).chain(self.w.iter().copied()).collect()
    }
}

/// ```text
/// χ   = φ̃ + i(ρ + c(𝒦 + log(ρ + c))) − Σ ζ^I ζ̃_I − Σ ζ^I F_IJ ζ^J
/// w_I = ½(ζ̃_I + Σ F_IJ ζ^J)
/// ```
pub fn holomorphic_coords(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<HoloCoords> {
    let c = c.value();
    if !(q.rho + c > 0.0) {
        return Err(GeomError::Domain(format!(
            "holomorphic coordinates need ρ + c > 0; got (c, ρ) = ({c}, {})",
            q.rho
        )));
    }
    let k = kahler_potential(model, &q.base)?;
    let jet = eval_jet(model, &q.base.homogeneous())?;
    let zeta = q.zeta.map(|v| Complex64::new(v, 0.0));
    let zeta_t = q.zeta_t.map(|v| Complex64::new(v, 0.0));
    let fz = &jet.f_ij * &zeta;
    let chi = Complex64::new(q.phi, q.rho + c * (k + (q.rho + c).ln())) - zeta.dot(&zeta_t) - zeta.dot(&fz);
    Ok(HoloCoords { chi, x: q.base.x().clone(), w: (zeta_t + fz) * Complex64::new(0.5, 0.0) })
}

/// Differentials `(dχ, dX^μ, dw_I)` by finite differences.
pub fn holomorphic_coframe(model: &PrepotentialModel, c: Deformation, q: &QkPoint) -> Result<Vec<DVector<Complex64>>> {
    let p = q.chart();
    let count = 2 * q.base.n() + 2;
    (0..count)
        .map(|k| {
            complex_gradient(
                &|x: &[f64]| {
                    let qq = QkPoint::from_chart(model, x)?;
                    Ok(holomorphic_coords(model, c, &qq)?.values()[k])
                },
                &p,
            )
        })
        .collect()
}

/// The complex structure for which `(χ, X, w)` are holomorphic.
pub fn structure_from_holomorphic_coords(
    model: &PrepotentialModel,
    c: Deformation,
    q: &QkPoint,
) -> Result<DMatrix<f64>> {
    structure_from_coframe(&holomorphic_coframe(model, c, q)?)
}
