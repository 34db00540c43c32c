//! Test functions with exact first-order oracles.
//!
//! Each function returns its value together with one canonical element of
//! the Clarke subdifferential, and flags whether the point is one of
//! differentiability.

mod channel;
mod spec;
mod spiral;
mod warga;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use channel::{region_classify, ChannelInstance, Region, REGION_TOL};
pub use spec::{InstanceKind, InstanceSpec};
pub use spiral::{Spiral, SEAM_TOL};
pub use warga::Warga;

use crate::adversaries::Metric;
use crate::error::{Error, Result};
use crate::vectorspace::Vector;

/// One oracle answer: value, a Clarke subgradient, and whether the function
/// is differentiable at the query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderReply {
    pub value: f64,
    pub subgrad: Vector,
    pub differentiable: bool,
}

impl FirstOrderReply {
    pub fn smooth(value: f64, subgrad: Vector) -> Self {
        FirstOrderReply {
            value,
            subgrad,
            differentiable: true,
        }
    }

    pub fn kink(value: f64, subgrad: Vector) -> Self {
        FirstOrderReply {
            value,
            subgrad,
            differentiable: false,
        }
    }

    /// Bitwise equality of value and subgradient.
    pub fn bitwise_eq(&self, other: &FirstOrderReply) -> bool {
        self.value.to_bits() == other.value.to_bits()
            && self.subgrad.dim() == other.subgrad.dim()
            && self
                .subgrad
                .iter()
                .zip(other.subgrad.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// A Lipschitz function with a first-order oracle.
pub trait Function: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply>;

    /// Declared Lipschitz constant on the region where the function is used.
    fn lipschitz(&self) -> f64;

    fn name(&self) -> &'static str;
}

impl<F: Function + ?Sized> Function for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        (**self).eval(x)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn name(&self) -> &'static str {
        (**self).name()
    }
}

impl<F: Function + ?Sized> Function for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        (**self).eval(x)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn name(&self) -> &'static str {
        (**self).name()
    }
}

impl<F: Function + ?Sized> Function for Arc<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        (**self).eval(x)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn name(&self) -> &'static str {
        (**self).name()
    }
}

/// Turns a reply of a nonnegative `g` into a reply of `sqrt(g)`, with
/// gradient `grad g / (2 sqrt g)`. At `g = 0` the zero vector is returned
/// and the point is flagged non-differentiable.
pub fn sqrt_oracle_transform(reply: &FirstOrderReply) -> Result<FirstOrderReply> {
    if !reply.value.is_finite() || reply.value < 0.0 {
        return Err(Error::NonFinite(format!(
            "square root of an oracle value {} is undefined",
            reply.value
        )));
    }
    if reply.value == 0.0 {
        return Ok(FirstOrderReply::kink(0.0, Vector::zeros(reply.subgrad.dim())));
    }
    let root = reply.value.sqrt();
    Ok(FirstOrderReply {
        value: root,
        subgrad: reply.subgrad.scaled(1.0 / (2.0 * root)),
        differentiable: reply.differentiable,
    })
}

/// `(x - x*)^T M (x - x*)` with gradient `2 M (x - x*)`.
#[derive(Clone, Debug)]
pub struct ShiftedQuadratic {
    metric: Arc<Metric>,
    x_star: Vector,
}

impl ShiftedQuadratic {
    pub fn new(metric: Arc<Metric>, x_star: Vector) -> Result<Self> {
        x_star.check_dim(metric.dim())?;
        Ok(ShiftedQuadratic { metric, x_star })
    }

    pub fn metric(&self) -> &Arc<Metric> {
        &self.metric
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }
}

impl Function for ShiftedQuadratic {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        x.check_dim(self.dim())?;
        let diff = x - &self.x_star;
        let value = self.metric.quad_form(&diff)?;
        let grad = self.metric.apply(&diff)?.scaled(2.0);
        Ok(FirstOrderReply::smooth(value, grad))
    }

    /// Only meaningful on a bounded set; reported for the unit ball around `x*`.
    fn lipschitz(&self) -> f64 {
        2.0 * self.metric.lambda_max()
    }

    fn name(&self) -> &'static str {
        "shifted_quadratic"
    }
}

/// `sqrt(f)` for a nonnegative inner function, evaluated through
/// [`sqrt_oracle_transform`].
#[derive(Clone, Debug)]
pub struct SqrtOf<F> {
    inner: F,
    lipschitz: f64,
}

impl<F: Function> SqrtOf<F> {
    pub fn new(inner: F, lipschitz: f64) -> Self {
        SqrtOf { inner, lipschitz }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: Function> Function for SqrtOf<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        sqrt_oracle_transform(&self.inner.eval(x)?)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn name(&self) -> &'static str {
        "sqrt"
    }
}

/// The square-root reduction of a shifted quadratic, `||M^{1/2}(x - x*)||`.
pub type SqrtQuadratic = SqrtOf<ShiftedQuadratic>;

/// `sqrt` of the shifted quadratic, Lipschitz with constant `sqrt(lambda_max)`.
pub fn sqrt_quadratic(metric: Arc<Metric>, x_star: Vector) -> Result<SqrtQuadratic> {
    let lip = metric.lambda_max().sqrt();
    Ok(SqrtOf::new(ShiftedQuadratic::new(metric, x_star)?, lip))
}

/// `||M^{1/2}(x - x*)||` evaluated through the matrix square root.
#[derive(Clone, Debug)]
pub struct NormDistance {
    metric: Arc<Metric>,
    x_star: Vector,
}

impl NormDistance {
    pub fn new(metric: Arc<Metric>, x_star: Vector) -> Result<Self> {
        x_star.check_dim(metric.dim())?;
        Ok(NormDistance { metric, x_star })
    }

    pub fn metric(&self) -> &Arc<Metric> {
        &self.metric
    }

    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }
}

impl Function for NormDistance {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        norm_distance_eval(&self.metric, &self.x_star, x)
    }

    fn lipschitz(&self) -> f64 {
        self.metric.lambda_max().sqrt()
    }

    fn name(&self) -> &'static str {
        "norm_distance"
    }
}

/// Value `||M^{1/2}(x - x*)||` and gradient `M (x - x*) / ||M^{1/2}(x - x*)||`
/// computed from `y = M^{1/2}(x - x*)`; zero subgradient at `x*`.
pub fn norm_distance_eval(metric: &Metric, x_star: &Vector, x: &Vector) -> Result<FirstOrderReply> {
    x.check_dim(metric.dim())?;
    let y = metric.apply_sqrt(&(x - x_star))?;
    let n = y.norm();
    if n == 0.0 {
        return Ok(FirstOrderReply::kink(0.0, Vector::zeros(x.dim())));
    }
    let grad = metric.apply_sqrt(&y)?.scaled(1.0 / n);
    Ok(FirstOrderReply::smooth(n, grad))
}

/// A function defined by a closure, for tests and ad hoc experiments.
pub struct ClosureFunction<F> {
    dim: usize,
    lipschitz: f64,
    f: F,
}

impl<F> ClosureFunction<F>
where
    F: Fn(&Vector) -> Result<FirstOrderReply> + Send + Sync,
{
    pub fn new(dim: usize, lipschitz: f64, f: F) -> Self {
        ClosureFunction { dim, lipschitz, f }
    }
}

impl<F> Function for ClosureFunction<F>
where
    F: Fn(&Vector) -> Result<FirstOrderReply> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        x.check_dim(self.dim)?;
        (self.f)(x)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn name(&self) -> &'static str {
        "closure"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::HardQuadratic;
    use crate::rng::RngStream;
    use crate::vectorspace::sample_ball;

    #[test]
    fn sqrt_transform_examples() {
        let r = FirstOrderReply::smooth(4.0, Vector::from_slice(&[2.0, 0.0]));
        let s = sqrt_oracle_transform(&r).unwrap();
        assert_eq!(s.value, 2.0);
        assert_eq!(s.subgrad, Vector::from_slice(&[0.5, 0.0]));

        let z = sqrt_oracle_transform(&FirstOrderReply::smooth(0.0, Vector::zeros(2))).unwrap();
        assert_eq!(z.value, 0.0);
        assert!(z.subgrad.is_zero() && !z.differentiable);

        let neg = FirstOrderReply::smooth(-1e-3, Vector::zeros(2));
        assert!(matches!(sqrt_oracle_transform(&neg), Err(Error::NonFinite(_))));
    }

    #[test]
    fn norm_distance_identity_example() {
        let f = NormDistance::new(Arc::new(Metric::Identity { dim: 2 }), Vector::zeros(2)).unwrap();
        let r = f.eval(&Vector::from_slice(&[3.0, 4.0])).unwrap();
        assert_eq!(r.value, 5.0);
        assert!((r.subgrad[0] - 0.6).abs() < 1e-15 && (r.subgrad[1] - 0.8).abs() < 1e-15);
        // The gradient norm here is exactly 1 = sqrt(lambda_max(I)).
        assert!((r.subgrad.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_route_agrees_with_direct_route() {
        let hq = HardQuadratic::new(6, 12).unwrap();
        let metric = Arc::new(hq.metric());
        let via_sqrt = sqrt_quadratic(metric.clone(), hq.x_star().clone()).unwrap();
        let direct = NormDistance::new(metric.clone(), hq.x_star().clone()).unwrap();
        let lmax = metric.lambda_max();
        let mut rng = RngStream::from_seed(8);
        for _ in 0..200 {
            let x = &sample_ball(12, 1.0, &mut rng).unwrap() + hq.x_star();
            let a = via_sqrt.eval(&x).unwrap();
            let b = direct.eval(&x).unwrap();
            assert!((a.value - b.value).abs() <= 1e-12 * b.value.max(1.0));
            assert!((&a.subgrad - &b.subgrad).norm() <= 1e-12);
            // Gradient norm bounded by sqrt(lambda_max(M)) <= 1.
            assert!(a.subgrad.norm() <= lmax.sqrt() + 1e-12);
            assert!(lmax <= 1.0 + 1e-12);
        }
    }
}
