//! Sample points for a scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qkgeom::cmap::QkPoint;
use qkgeom::prepotential::{special_matrices, PrepotentialModel};

use crate::config::{ConfigError, PointSpec};

const MAX_ATTEMPTS: usize = 100_000;

/// Box from which random points are drawn.
#[derive(Debug, Clone, Copy)]
pub struct SampleBox {
    pub y: (f64, f64),
    pub x: (f64, f64),
    pub base_radius: f64,
    pub rho: (f64, f64),
    pub fibre: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { y: (-1.0, 1.0), x: (0.5, 2.0), base_radius: 0.8, rho: (0.5, 3.0), fibre: (-1.0, 1.0) }
    }
}

impl SampleBox {
    pub fn with_rho(self, lo: f64, hi: f64) -> Self {
        Self { rho: (lo, hi), ..self }
    }
}

/// Draws one chart point whose base lies in the domain of `model`.
///
/// Quadratic bases are uniform in the ball of radius `base_radius`; cubic
/// bases are uniform in the `y`/`x` box, rejecting points outside the cone.
pub fn draw(model: &PrepotentialModel, rng: &mut ChaCha8Rng, b: &SampleBox) -> Option<QkPoint> {
    let n = model.n();
    for _ in 0..MAX_ATTEMPTS {
        let mut p = Vec::with_capacity(4 * n + 4);
        match model {
            PrepotentialModel::Quadratic { .. } => {
                let r = b.base_radius;
                let v: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-r..r)).collect();
                if v.iter().map(|t| t * t).sum::<f64>() >= r * r {
                    continue;
                }
                p.extend(v);
            }
            PrepotentialModel::VerySpecial(_) => {
                p.extend((0..n).map(|_| rng.gen_range(b.y.0..b.y.1)));
                p.extend((0..n).map(|_| rng.gen_range(b.x.0..b.x.1)));
            }
        }
        p.push(rng.gen_range(b.rho.0..b.rho.1));
        p.extend((0..2 * n + 3).map(|_| rng.gen_range(b.fibre.0..b.fibre.1)));
        if let Ok(q) = QkPoint::from_chart(model, &p) {
            if special_matrices(model, &q.base.homogeneous()).is_ok() {
                return Some(q);
            }
        }
    }
    None
}

pub fn draw_many(
    model: &PrepotentialModel,
    rng: &mut ChaCha8Rng,
    b: &SampleBox,
    count: usize,
) -> Result<Vec<QkPoint>, ConfigError> {
    (0..count)
        .map(|_| {
            draw(model, rng, b).ok_or_else(|| {
                ConfigError::Invalid(format!("no domain points found in the sampling box after {MAX_ATTEMPTS} draws"))
            })
        })
        .collect()
}

/// Resolves a point specification to chart points. With `rho` given, the
/// `k`-th point gets `ρ = rho[k mod len]`.
pub fn resolve_points(
    model: &PrepotentialModel,
    spec: &PointSpec,
    seed: u64,
    rho: Option<&[f64]>,
) -> Result<Vec<Vec<f64>>, ConfigError> {
    let mut pts = match spec {
        PointSpec::Explicit { points } => points.clone(),
        PointSpec::Random { count, y_range, x_range, base_radius, rho_range, fibre_range } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b =
                SampleBox { y: *y_range, x: *x_range, base_radius: *base_radius, rho: *rho_range, fibre: *fibre_range };
            draw_many(model, &mut rng, &b, *count)?.iter().map(QkPoint::chart).collect()
        }
    };
    if let Some(r) = rho {
        let idx = 2 * model.n();
        for (k, p) in pts.iter_mut().enumerate() {
            p[idx] = r[k % r.len()];
        }
    }
    Ok(pts)
}
