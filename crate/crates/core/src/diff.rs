//! Finite-difference differentiation of fields on real coordinate charts.
//!
//! Every derivative is a central difference combined with one step of
//! Richardson extrapolation over the step pair `(h, h/2)`, where
//! `h = 1e-3 * max(1, |x_i|)`. Fields are closures and are re-evaluated for
//! every stencil; nothing is cached between calls.
//!
//! Callers near a domain boundary must keep a margin of `4h` themselves: the
//! stencils never shrink.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{GeomError, Result};

pub type Complex64 = Complex<f64>;

/// Relative base step of every stencil.
pub const BASE_STEP: f64 = 1e-3;

/// A point in a real coordinate chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint(Vec<f64>);

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(GeomError::Precondition("chart point of dimension 0".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite { point: coords });
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ChartPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Values a field may take: anything closed under real linear combination.
pub trait FieldValue: Clone {
    fn scale(&mut self, a: f64);
    /// `self += a * other`
    fn add_scaled(&mut self, a: f64, other: &Self);
    fn is_finite_value(&self) -> bool;
}

impl FieldValue for f64 {
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl FieldValue for Complex64 {
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += other * a;
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

macro_rules! impl_field_value_storage {
    ($ty:ty, $scalar:ty) => {
        impl FieldValue for $ty {
            fn scale(&mut self, a: f64) {
                self.iter_mut().for_each(|v| <$scalar as FieldValue>::scale(v, a));
            }
            fn add_scaled(&mut self, a: f64, other: &Self) {
                assert_eq!(self.shape(), other.shape(), "field values of different shape");
                self.iter_mut().zip(other.iter()).for_each(|(v, o)| <$scalar as FieldValue>::add_scaled(v, a, o));
            }
            fn is_finite_value(&self) -> bool {
                self.iter().all(<$scalar as FieldValue>::is_finite_value)
            }
        }
    };
}

impl_field_value_storage!(DVector<f64>, f64);
impl_field_value_storage!(DMatrix<f64>, f64);
impl_field_value_storage!(DVector<Complex64>, Complex64);
impl_field_value_storage!(DMatrix<Complex64>, Complex64);

/// A field of real symmetric matrices on a chart: the input of every
/// curvature and geodesic computation.
pub trait MetricField {
    fn dim(&self) -> usize;
    fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>>;
}

/// Adapter turning a closure into a [`MetricField`].
pub struct FnMetric<F> {
    dim: usize,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> MetricField for FnMetric<F>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        if p.len() != self.dim {
            return Err(GeomError::Dimension { expected: self.dim, got: p.len() });
        }
        (self.f)(p)
    }
}

/// Step used along a coordinate whose current value is `x`.
pub fn step_for(x: f64) -> f64 {
    BASE_STEP * x.abs().max(1.0)
}

fn eval<T: FieldValue, F>(f: &F, x: &[f64]) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
{
    let v = f(x)?;
    if !v.is_finite_value() {
        return Err(GeomError::NonFinite { point: x.to_vec() });
    }
    Ok(v)
}

fn shifted(p: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut q = p.to_vec();
    for &(i, d) in moves {
        q[i] += d;
    }
    q
}

fn lincomb<T: FieldValue>(terms: &[(f64, &T)]) -> T {
    let mut out = terms[0].1.clone();
    out.scale(terms[0].0);
    for (a, v) in &terms[1..] {
        out.add_scaled(*a, v);
    }
    out
}

fn check_index(p: &[f64], i: usize) -> Result<()> {
    if i >= p.len() {
        return Err(GeomError::Precondition(format!("coordinate index {i} out of range for dimension {}", p.len())));
    }
    Ok(())
}

/// `∂f/∂x^i` at `p`.
pub fn first<T: FieldValue, F>(f: &F, p: &[f64], i: usize) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
{
    check_index(p, i)?;
    first_with_step(f, p, i, step_for(p[i]))
}

/// `∂f/∂x^i` with an explicit coarse step `h` (the fine step is `h/2`).
pub fn first_with_step<T: FieldValue, F>(f: &F, p: &[f64], i: usize, h: f64) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
{
    check_index(p, i)?;
    let central = |h: f64| -> Result<T> {
        let plus = eval(f, &shifted(p, &[(i, h)]))?;
        let minus = eval(f, &shifted(p, &[(i, -h)]))?;
        Ok(lincomb(&[(0.5 / h, &plus), (-0.5 / h, &minus)]))
    };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok(lincomb(&[(4.0 / 3.0, &fine), (-1.0 / 3.0, &coarse)]))
}

/// A finite-difference stencil: coarsest relative step and number of
/// Richardson levels (`levels = 2` cancels the `h²` error term).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    /// Step along `x^i` is `step · max(1, |x^i|)`.
    pub step: f64,
    pub levels: usize,
}

impl Default for Stencil {
    fn default() -> Self {
        Self { step: BASE_STEP, levels: 2 }
    }
}

impl Stencil {
    pub fn new(step: f64, levels: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || levels == 0 {
            return Err(GeomError::Precondition(format!(
                "stencil needs a positive step and at least one level, got ({step}, {levels})"
            )));
        }
        Ok(Self { step, levels })
    }

    fn step_at(&self, x: f64) -> f64 {
        self.step * x.abs().max(1.0)
    }
}

/// Richardson table over estimates at `h, h/2, h/4, …` whose error expands in
/// even powers of `h`.
fn richardson<T: FieldValue>(mut table: Vec<T>) -> T {
    let levels = table.len();
    for m in 1..levels {
        let w = 4f64.powi(m as i32);
        table =
            table.windows(2).map(|pair| lincomb(&[(w / (w - 1.0), &pair[1]), (-1.0 / (w - 1.0), &pair[0])])).collect();
    }
    table.pop().expect("one entry left")
}

fn halvings(levels: usize) -> impl Iterator<Item = f64> {
    (0..levels).map(|k| 1.0 / (1u64 << k) as f64)
}

/// `∂f/∂x^i` from central differences at `h, h/2, …, h/2^(levels−1)` combined
/// by a full Richardson table; the error is `O(h^(2·levels))`.
pub fn first_extrapolated<T: FieldValue, F>(f: &F, p: &[f64], i: usize, h: f64, levels: usize) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
{
    check_index(p, i)?;
    if levels == 0 {
        return Err(GeomError::Precondition("at least one Richardson level is needed".into()));
    }
    let table = halvings(levels)
        .map(|s| {
            let hk = h * s;
            let plus = eval(f, &shifted(p, &[(i, hk)]))?;
            let minus = eval(f, &shifted(p, &[(i, -hk)]))?;
            Ok(lincomb(&[(0.5 / hk, &plus), (-0.5 / hk, &minus)]))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(richardson(table))
}

fn second_diag<T: FieldValue, F>(f: &F, p: &[f64], i: usize, center: &T, st: Stencil) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
{
    let h = st.step_at(p[i]);
    let table = halvings(st.levels)
        .map(|s| {
            let hk = h * s;
            let plus = eval(f, &shifted(p, &[(i, hk)]))?;
            let minus = eval(f, &shifted(p, &[(i, -hk)]))?;
            let w = 1.0 / (hk * hk);
            Ok(lincomb(&[(w, &plus), (-2.0 * w, center), (w, &minus)]))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(richardson(table))
}

fn second_mixed<T: FieldValue, F>(f: &F, p: &[f64], i: usize, j: usize, st: Stencil) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
{
    let hi = st.step_at(p[i]);
    let hj = st.step_at(p[j]);
    let table = halvings(st.levels)
        .map(|s| {
            let (a, b) = (s * hi, s * hj);
            let pp = eval(f, &shifted(p, &[(i, a), (j, b)]))?;
            let pm = eval(f, &shifted(p, &[(i, a), (j, -b)]))?;
            let mp = eval(f, &shifted(p, &[(i, -a), (j, b)]))?;
            let mm = eval(f, &shifted(p, &[(i, -a), (j, -b)]))?;
            let w = 0.25 / (a * b);
            Ok(lincomb(&[(w, &pp), (-w, &pm), (-w, &mp), (w, &mm)]))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(richardson(table))
}

/// `∂²f/∂x^i∂x^j` at `p`.
pub fn second<T: FieldValue, F>(f: &F, p: &[f64], i: usize, j: usize) -> Result<T>
where
    F: Fn(&[f64]) -> Result<T>,
{
    check_index(p, i)?;
    check_index(p, j)?;
    if i == j {
        let center = eval(f, p)?;
        second_diag(f, p, i, &center, Stencil::default())
    } else {
        second_mixed(f, p, i, j, Stencil::default())
    }
}

/// All first partials `[∂_0 f, …, ∂_{d-1} f]`.
pub fn all_first<T: FieldValue, F>(f: &F, p: &[f64]) -> Result<Vec<T>>
where
    F: Fn(&[f64]) -> Result<T>,
{
    (0..p.len()).map(|i| first(f, p, i)).collect()
}

/// All second partials, returned as a full symmetric table `h[i][j]`.
pub fn all_second<T: FieldValue, F>(f: &F, p: &[f64]) -> Result<Vec<Vec<T>>>
where
    F: Fn(&[f64]) -> Result<T>,
{
    all_second_with(f, p, Stencil::default())
}

/// [`all_second`] with an explicit stencil.
#[allow(clippy::needless_range_loop)]
pub fn all_second_with<T: FieldValue, F>(f: &F, p: &[f64], st: Stencil) -> Result<Vec<Vec<T>>>
where
    F: Fn(&[f64]) -> Result<T>,
{
    let d = p.len();
    let center = eval(f, p)?;
    let mut table: Vec<Vec<Option<T>>> = vec![vec![None; d]; d];
    for i in 0..d {
        table[i][i] = Some(second_diag(f, p, i, &center, st)?);
        for j in (i + 1)..d {
            let v = second_mixed(f, p, i, j, st)?;
            table[j][i] = Some(v.clone());
            table[i][j] = Some(v);
        }
    }
    Ok(table.into_iter().map(|row| row.into_iter().map(|v| v.expect("filled")).collect()).collect())
}

/// All first partials with an explicit stencil.
pub fn all_first_with<T: FieldValue, F>(f: &F, p: &[f64], st: Stencil) -> Result<Vec<T>>
where
    F: Fn(&[f64]) -> Result<T>,
{
    (0..p.len()).map(|i| first_extrapolated(f, p, i, st.step_at(p[i]), st.levels)).collect()
}

/// Scalar partial derivative of order 1 or 2.
///
/// For `order == 2` the second index defaults to `index` (pure second
/// derivative).
pub fn partial_derivative<F>(field: &F, p: &ChartPoint, index: usize, order: u8, index2: Option<usize>) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    match order {
        1 => first(field, p.coords(), index),
        2 => second(field, p.coords(), index, index2.unwrap_or(index)),
        _ => Err(GeomError::Precondition(format!("derivative order must be 1 or 2, got {order}"))),
    }
}

/// Differential of a scalar field as a covector.
pub fn gradient<F>(field: &F, p: &[f64]) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    Ok(DVector::from_vec(all_first(field, p)?))
}

/// Differential of a complex scalar field as a complex covector.
pub fn complex_gradient<F>(field: &F, p: &[f64]) -> Result<DVector<Complex64>>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    Ok(DVector::from_vec(all_first(field, p)?))
}

/// Exterior derivative of a one-form field, as the antisymmetric matrix
/// `(dω)_ij = ∂_i ω_j − ∂_j ω_i`.
pub fn exterior_derivative<F>(omega: &F, p: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>>,
{
    let d = p.len();
    let partials = all_first(omega, p)?;
    for w in &partials {
        if w.len() != d {
            return Err(GeomError::Dimension { expected: d, got: w.len() });
        }
    }
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v = partials[i][j] - partials[j][i];
            out[(i, j)] = v;
            out[(j, i)] = -v;
        }
    }
    Ok(out)
}

/// Exterior derivative of a two-form field given as antisymmetric matrices.
///
/// Returns the fully antisymmetric array `(dΩ)_ijk = ∂_i Ω_jk + ∂_j Ω_ki + ∂_k Ω_ij`
/// flattened as `[i * d * d + j * d + k]`.
pub fn exterior_derivative_two_form<F>(omega: &F, p: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let d = p.len();
    let partials = all_first(omega, p)?;
    let mut out = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                out[i * d * d + j * d + k] = partials[i][(j, k)] + partials[j][(k, i)] + partials[k][(i, j)];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(v: &[f64]) -> ChartPoint {
        ChartPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cubic_first_derivative() {
        let f = |x: &[f64]| Ok(x[0].powi(3));
        let d = partial_derivative(&f, &pt(&[2.0]), 0, 1, None).unwrap();
        assert_abs_diff_eq!(d, 12.0, epsilon = 1e-7);
    }

    #[test]
    fn mixed_second_derivative() {
        let f = |x: &[f64]| Ok(x[0] * x[0] * x[1]);
        let d = partial_derivative(&f, &pt(&[1.0, 2.0]), 0, 2, Some(1)).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn exp_second_derivative() {
        let f = |x: &[f64]| Ok(x[0].exp());
        let d = partial_derivative(&f, &pt(&[0.0]), 0, 2, None).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn bad_order_is_rejected() {
        let f = |x: &[f64]| Ok(x[0]);
        assert!(matches!(partial_derivative(&f, &pt(&[0.0]), 0, 3, None), Err(GeomError::Precondition(_))));
        assert!(partial_derivative(&f, &pt(&[0.0]), 4, 1, None).is_err());
    }

    #[test]
    fn non_finite_value_reports_point() {
        // log blows up at the left stencil point of x = 0.0005
        let f = |x: &[f64]| Ok(x[0].ln());
        let err = partial_derivative(&f, &pt(&[0.0005]), 0, 1, None).unwrap_err();
        match err {
            GeomError::NonFinite { point } => assert!(point[0] <= 0.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn field_errors_propagate() {
        let f = |x: &[f64]| {
            if x[0] > 1.0 {
                Err(GeomError::Domain("x > 1".into()))
            } else {
                Ok(x[0])
            }
        };
        assert!(matches!(partial_derivative(&f, &pt(&[1.0]), 0, 1, None), Err(GeomError::Domain(_))));
    }

    #[test]
    fn chart_point_rejects_bad_input() {
        assert!(ChartPoint::new(vec![]).is_err());
        assert!(ChartPoint::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn x_dy_has_unit_exterior_derivative() {
        let omega = |x: &[f64]| Ok(DVector::from_vec(vec![0.0, x[0]]));
        let d = exterior_derivative(&omega, &[0.3, -1.2]).unwrap();
        assert_abs_diff_eq!(d[(0, 1)], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d[(1, 0)], -1.0, epsilon = 1e-10);
    }

    #[test]
    fn exact_form_is_closed() {
        let omega = |x: &[f64]| Ok(DVector::from_vec(vec![x[1], x[0]]));
        let d = exterior_derivative(&omega, &[1.7, 0.4]).unwrap();
        assert_abs_diff_eq!(d[(0, 1)], 0.0, epsilon = 1e-7);
    }

    #[test]
    fn rotation_form() {
        let omega = |x: &[f64]| Ok(DVector::from_vec(vec![-x[1], x[0]]));
        let d = exterior_derivative(&omega, &[-0.5, 2.0]).unwrap();
        assert_abs_diff_eq!(d[(0, 1)], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn matrix_fields_differentiate_componentwise() {
        let f = |x: &[f64]| Ok(DMatrix::from_row_slice(2, 2, &[x[0] * x[0], x[0] * x[1], x[0] * x[1], x[1].sin()]));
        let h = all_second(&f, &[0.5, 0.25]).unwrap();
        assert_abs_diff_eq!(h[0][0][(0, 0)], 2.0, epsilon = 1e-7);
        assert_abs_diff_eq!(h[0][1][(0, 1)], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(h[1][1][(1, 1)], -(0.25f64).sin(), epsilon = 1e-7);
    }

    #[test]
    fn closed_two_form_has_vanishing_derivative() {
        // Ω = d(x0 x1 dx2) is exact
        let f = |x: &[f64]| {
            let mut m = DMatrix::zeros(3, 3);
            m[(0, 2)] = x[1];
            m[(2, 0)] = -x[1];
            m[(1, 2)] = x[0];
            m[(2, 1)] = -x[0];
            Ok(m)
        };
        let d = exterior_derivative_two_form(&f, &[0.1, 0.2, 0.3]).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn extrapolation_levels() {
        let f = |x: &[f64]| Ok(x[0].sin());
        let exact = 0.7f64.cos();
        let plain: f64 = first_extrapolated(&f, &[0.7], 0, 0.1, 1).unwrap();
        let deep: f64 = first_extrapolated(&f, &[0.7], 0, 0.1, 3).unwrap();
        assert!((plain - exact).abs() > 1e-4);
        assert!((deep - exact).abs() < 1e-9);
        assert!(first_extrapolated(&f, &[0.7], 0, 0.1, 0).is_err());
    }
}
