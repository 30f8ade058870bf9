//! Closed form of the deformed metric for the quadratic prepotential, written
//! in the complex fibre coordinates `w₀ = ½(ζ̃₀ + iζ⁰)`, `w_μ = ½(ζ̃_μ − iζ^μ)`.

use nalgebra::{DMatrix, DVector};

use super::{domain_classify, DomainBranch, Layout, QkPoint};
use crate::diff::Complex64;
use crate::error::{GeomError, Result};
use crate::forms::{abs2, square};

/// ```text
/// g = (ρ+c)/ρ · 1/(1−‖X‖²) (Σ dX^μ dX̄^μ + 1/(1−‖X‖²) |Σ X̄^μ dX^μ|²)
///   + 1/(4ρ²) (ρ+2c)/(ρ+c) dρ²
///   − (2/ρ)(dw₀dw̄₀ − Σ dw_μ dw̄_μ)
///   + (ρ+c)/ρ² · 4/(1−‖X‖²) |dw₀ + Σ X^μ dw_μ|²
///   + 1/(4ρ²) (ρ+c)/(ρ+2c) (dφ̃ − 4 Im(w̄₀dw₀ − Σ w̄_μ dw_μ) + 2c/(1−‖X‖²) Im Σ X̄^μ dX^μ)²
/// ```
pub fn chn_closed_form(n: usize, c: f64, q: &QkPoint) -> Result<DMatrix<f64>> {
    if q.base.n() != n {
        return Err(GeomError::Dimension { expected: n, got: q.base.n() });
    }
    let rho = q.rho;
    if domain_classify(c, rho) != DomainBranch::PosDef {
        return Err(GeomError::Domain(format!("(c, ρ) = ({c}, {rho}) is not in the positive definite branch")));
    }
    let x = q.base.x();
    let r2: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if !(r2 < 1.0) {
        return Err(GeomError::OutsideCone { f: 1.0 - r2 });
    }
    let lay = Layout::new(n);
    let d = lay.dim();
    let zero = || DVector::from_element(d, Complex64::new(0.0, 0.0));
    let i = Complex64::new(0.0, 1.0);
    let unit = |k: usize| lay.unit(k).map(|v| Complex64::new(v, 0.0));

    let dx: Vec<_> = (0..n).map(|m| unit(lay.y(m)) + unit(lay.x(m)) * i).collect();
    let w: Vec<Complex64> = (0..=n)
        .map(|k| {
            let s = if k == 0 { 1.0 } else { -1.0 };
            Complex64::new(q.zeta_t[k], s * q.zeta[k]) * 0.5
        })
        .collect();
    let dw: Vec<_> = (0..=n)
        .map(|k| {
            let s = if k == 0 { 1.0 } else { -1.0 };
            (unit(lay.zeta_t(k)) + unit(lay.zeta(k)) * (i * s)) * Complex64::new(0.5, 0.0)
        })
        .collect();
    let one_minus = 1.0 - r2;

    let xbar_dx = dx.iter().zip(x.iter()).fold(zero(), |acc, (f, v)| acc + f * v.conj());
    let mut g = DMatrix::zeros(d, d);
    let mut base = abs2(&xbar_dx) / one_minus;
    for f in &dx {
        base += abs2(f);
    }
    g += base * ((rho + c) / rho / one_minus);

    g += square(&lay.unit(lay.rho())) * ((rho + 2.0 * c) / (rho + c) / (4.0 * rho * rho));

    let mut wsum = abs2(&dw[0]);
    for f in &dw[1..] {
        wsum -= abs2(f);
    }
    g -= wsum * (2.0 / rho);

    let combo = dw[1..].iter().zip(x.iter()).fold(dw[0].clone(), |acc, (f, v)| acc + f * *v);
    g += abs2(&combo) * ((rho + c) / (rho * rho) * 4.0 / one_minus);

    let mut wdw = &dw[0] * w[0].conj();
    for k in 1..=n {
        wdw -= &dw[k] * w[k].conj();
    }
    let conn = lay.unit(lay.phi()) - wdw.map(|v| v.im) * 4.0 + xbar_dx.map(|v| v.im) * (2.0 * c / one_minus);
    g += square(&conn) * ((rho + c) / (rho + 2.0 * c) / (4.0 * rho * rho));

    Ok((&g + g.transpose()) * 0.5)
}
