//! Geodesics and curve lengths for probing metric completeness.

use nalgebra::DVector;

use crate::cmap::{deformed_fs_metric, Deformation, QkPoint};
use crate::curvature::christoffel;
use crate::diff::{ChartPoint, MetricField};
use crate::error::{GeomError, Result};
use crate::prepotential::PrepotentialModel;

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub position: ChartPoint,
    pub velocity: DVector<f64>,
    pub t: f64,
}

impl GeodesicState {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(GeomError::Dimension { expected: position.len(), got: velocity.len() });
        }
        Ok(Self { position: ChartPoint::new(position)?, velocity: DVector::from_vec(velocity), t: 0.0 })
    }

    /// `g(v, v)` at the current position.
    pub fn energy<G: MetricField + ?Sized>(&self, gf: &G) -> Result<f64> {
        let g = gf.metric(self.position.coords())?;
        Ok(self.velocity.dot(&(g * &self.velocity)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    TimeElapsed,
    /// The metric could not be evaluated at the next stage; carries the error.
    LeftDomain(GeomError),
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<GeodesicState>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.samples.last().expect("trajectory holds the initial state")
    }
}

fn acceleration<G: MetricField + ?Sized>(gf: &G, x: &[f64], v: &DVector<f64>) -> Result<DVector<f64>> {
    let gamma = christoffel(gf, x)?;
    let d = x.len();
    Ok(DVector::from_fn(d, |i, _| {
        let mut s = 0.0;
        for j in 0..d {
            for k in 0..d {
                s += gamma.get(&[i, j, k]) * v[j] * v[k];
            }
        }
        -s
    }))
}

/// Classical RK4 on `ẍ^i = −Γ^i_{jk} ẋ^j ẋ^k` with `steps` equal steps up
/// to time `t_end`.
pub fn geodesic_integrate<G: MetricField + ?Sized>(
    gf: &G,
    state0: &GeodesicState,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory> {
    if state0.position.dim() != gf.dim() {
        return Err(GeomError::Dimension { expected: gf.dim(), got: state0.position.dim() });
    }
    if steps == 0 || !(t_end > 0.0) {
        return Err(GeomError::Precondition("need steps > 0 and T > 0".into()));
    }
    gf.metric(state0.position.coords())?;
    let h = t_end / steps as f64;
    if !(state0.t + h > state0.t) {
        return Ok(Trajectory { samples: vec![state0.clone()], termination: Termination::StepUnderflow });
    }

    let mut samples = vec![state0.clone()];
    let mut x = DVector::from_column_slice(state0.position.coords());
    let mut v = state0.velocity.clone();
    let mut t = state0.t;
    for _ in 0..steps {
        let stage = || -> Result<(DVector<f64>, DVector<f64>)> {
            let a1 = acceleration(gf, x.as_slice(), &v)?;
            let (x2, v2) = (&x + &v * (0.5 * h), &v + &a1 * (0.5 * h));
            let a2 = acceleration(gf, x2.as_slice(), &v2)?;
            let (x3, v3) = (&x + &v2 * (0.5 * h), &v + &a2 * (0.5 * h));
            let a3 = acceleration(gf, x3.as_slice(), &v3)?;
            let (x4, v4) = (&x + &v3 * h, &v + &a3 * h);
            let a4 = acceleration(gf, x4.as_slice(), &v4)?;
            let nx = &x + (&v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
            let nv = &v + (&a1 + &a2 * 2.0 + &a3 * 2.0 + &a4) * (h / 6.0);
            gf.metric(nx.as_slice())?;
            Ok((nx, nv))
        };
        match stage() {
            Ok((nx, nv)) => {
                x = nx;
                v = nv;
                t += h;
                samples.push(GeodesicState {
                    position: ChartPoint::new(x.as_slice().to_vec())?,
                    velocity: v.clone(),
                    t,
                });
            }
            Err(e) => return Ok(Trajectory { samples, termination: Termination::LeftDomain(e) }),
        }
    }
    Ok(Trajectory { samples, termination: Termination::TimeElapsed })
}

/// Trapezoidal length `Σ ½(|Δ|_{g(p_k)} + |Δ|_{g(p_{k+1})})` of a polygon.
pub fn curve_length<G: MetricField + ?Sized>(gf: &G, samples: &[Vec<f64>]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(GeomError::Precondition("a curve needs at least two samples".into()));
    }
    let metrics = samples.iter().map(|p| gf.metric(p)).collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for k in 0..samples.len() - 1 {
        let delta = DVector::from_column_slice(&samples[k + 1]) - DVector::from_column_slice(&samples[k]);
        let norm = |g: &nalgebra::DMatrix<f64>| delta.dot(&(g * &delta)).max(0.0).sqrt();
        total += 0.5 * (norm(&metrics[k]) + norm(&metrics[k + 1]));
    }
    Ok(total)
}

/// Number of samples used by [`radial_divergence_probe`].
pub const RADIAL_SAMPLES: usize = 4000;

/// Length of the segment `ρ: ρ₀ → ε` at fixed other coordinates, and the
/// lower bound `½ log(ρ₀/ε)`.
///
/// Samples are spaced uniformly in `log ρ`.
pub fn radial_divergence_probe(
    model: &PrepotentialModel,
    c: f64,
    rho0: f64,
    epsilon: f64,
    q_base: &QkPoint,
) -> Result<(f64, f64)> {
    if !(0.0 < epsilon && epsilon < rho0) {
        return Err(GeomError::Precondition(format!("need 0 < ε < ρ₀, got ε = {epsilon}, ρ₀ = {rho0}")));
    }
    let lay = q_base.layout();
    let field = crate::diff::FnMetric::new(lay.dim(), |p: &[f64]| {
        deformed_fs_metric(model, Deformation(c), &QkPoint::from_chart(model, p)?)
    });
    let (a, b) = (rho0.ln(), epsilon.ln());
    let base = q_base.chart();
    let samples: Vec<Vec<f64>> = (0..=RADIAL_SAMPLES)
        .map(|k| {
            let mut p = base.clone();
            p[lay.rho()] = (a + (b - a) * k as f64 / RADIAL_SAMPLES as f64).exp();
            p
        })
        .collect();
    let length = curve_length(&field, &samples)?;
    Ok((length, 0.5 * (rho0 / epsilon).ln()))
}

/// `ḡ`-length of the straight segment `X = t·e₁`, `t ∈ [0, 1−δ]`, on the
/// quadratic base with `n ≥ 1`, sampled uniformly in `artanh t`.
pub fn base_segment_length(model: &PrepotentialModel, delta: f64, samples: usize) -> Result<f64> {
    let n = model.n();
    if !matches!(model, PrepotentialModel::Quadratic { .. }) || n == 0 {
        return Err(GeomError::Precondition("base segment probe needs a quadratic model with n ≥ 1".into()));
    }
    if !(0.0 < delta && delta < 1.0) || samples < 2 {
        return Err(GeomError::Precondition("need 0 < δ < 1 and at least two samples".into()));
    }
    let field = crate::diff::FnMetric::new(2 * n, |p: &[f64]| {
        let x = crate::special_kahler::PskPoint::from_chart(model, p)?;
        Ok(crate::special_kahler::base_metric(model, &x)?.matrix)
    });
    let umax = (1.0 - delta).atanh();
    let pts: Vec<Vec<f64>> = (0..=samples)
        .map(|k| {
            let mut p = vec![0.0; 2 * n];
            p[0] = (umax * k as f64 / samples as f64).tanh();
            p
        })
        .collect();
    curve_length(&field, &pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::FnMetric;
    use nalgebra::DMatrix;

    fn half_plane() -> impl MetricField {
        FnMetric::new(2, |p: &[f64]| {
            if p[1] <= 0.0 {
                return Err(GeomError::Domain("y ≤ 0".into()));
            }
            Ok(DMatrix::identity(2, 2) / (p[1] * p[1]))
        })
    }

    #[test]
    fn flat_straight_line() {
        let flat = FnMetric::new(2, |_: &[f64]| Ok(DMatrix::identity(2, 2)));
        let s = GeodesicState::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let tr = geodesic_integrate(&flat, &s, 3.0, 30).unwrap();
        let end = tr.last().position.coords();
        assert!((end[0] - 3.0).abs() < 1e-8 && end[1].abs() < 1e-8);
        assert_eq!(tr.termination, Termination::TimeElapsed);
    }

    #[test]
    fn vertical_geodesic() {
        let s = GeodesicState::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let tr = geodesic_integrate(&half_plane(), &s, 1.0, 200).unwrap();
        assert!((tr.last().position.coords()[1] - 1f64.exp()).abs() < 1e-6);
        assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn leaves_domain() {
        let s = GeodesicState::new(vec![0.0, 1.0], vec![0.0, -50.0]).unwrap();
        let tr = geodesic_integrate(
            &FnMetric::new(2, |p: &[f64]| {
                if p[1] <= 0.5 {
                    return Err(GeomError::Domain("cut".into()));
                }
                Ok(DMatrix::identity(2, 2))
            }),
            &s,
            1.0,
            100,
        )
        .unwrap();
        assert!(matches!(tr.termination, Termination::LeftDomain(GeomError::Domain(_))));
    }

    #[test]
    fn lengths() {
        let flat = FnMetric::new(2, |_: &[f64]| Ok(DMatrix::identity(2, 2)));
        let l = curve_length(&flat, &[vec![0.0, 0.0], vec![1.2, 1.6]]).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        let pts: Vec<Vec<f64>> = (0..=2000).map(|k| vec![0.0, (k as f64 / 2000.0).exp()]).collect();
        assert!((curve_length(&half_plane(), &pts).unwrap() - 1.0).abs() < 1e-4);
        assert!(curve_length(&flat, &[vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn radial_length_at_c_zero() {
        let m = PrepotentialModel::quadratic(0);
        let q = QkPoint::from_chart(&m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let (len, bound) = radial_divergence_probe(&m, 0.0, 1.0, (-4f64).exp(), &q).unwrap();
        assert!((len - 2.0).abs() < 1e-3);
        assert!((bound - 2.0).abs() < 1e-15);
    }
}
