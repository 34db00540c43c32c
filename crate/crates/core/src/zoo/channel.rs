use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{sqrt_quadratic, FirstOrderReply, Function, SqrtQuadratic};
use crate::adversaries::Metric;
use crate::error::{Error, Result};
use crate::vectorspace::{normalize, Vector};

/// Absolute tolerance on the defining equalities of each region.
pub const REGION_TOL: f64 = 1e-12;

/// Where a point sits relative to the kinks of the channel function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Origin,
    MinusW,
    HingeBoundary,
    HingeInactive,
    HingeActive,
    ClampActive,
    ClampBoundary,
}

impl Region {
    pub fn is_differentiable(self) -> bool {
        matches!(self, Region::HingeInactive | Region::HingeActive | Region::ClampActive)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Origin => "origin",
            Region::MinusW => "minus_w",
            Region::HingeBoundary => "hinge_boundary",
            Region::HingeInactive => "hinge_inactive",
            Region::HingeActive => "hinge_active",
            Region::ClampActive => "clamp_active",
            Region::ClampBoundary => "clamp_boundary",
        }
    }
}

/// `g_w(y) = ||y|| - [4 wbar^T (y + w) - 2 ||y + w||]_+`, optionally composed
/// with `y = M^{1/2}(x - x*)` and clamped from below.
///
/// With the affine part present, the `||y||` term is evaluated as the square
/// root of the shifted quadratic, so on the hinge-inactive region replies are
/// bit-identical to those of that square root.
#[derive(Clone, Debug)]
pub struct ChannelInstance {
    w: Vector,
    w_bar: Vector,
    clamp: Option<f64>,
    affine: Option<SqrtQuadratic>,
}

struct Parts {
    region: Region,
    value: f64,
    subgrad: Vector,
}

impl ChannelInstance {
    pub fn new(w: Vector, clamp: Option<f64>, affine: Option<(Arc<Metric>, Vector)>) -> Result<Self> {
        let w_bar = normalize(&w).map_err(|_| Error::InvalidParameter("channel direction w must be nonzero".into()))?;
        if let Some(c) = clamp {
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("clamp level {c}")));
            }
        }
        let affine = match affine {
            None => None,
            Some((metric, x_star)) => {
                w.check_dim(metric.dim())?;
                let (lo, hi) = (metric.lambda_min(), metric.lambda_max());
                if lo < 0.5 - 1e-9 || hi > 1.0 + 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "metric spectrum [{lo}, {hi}] outside [1/2, 1]"
                    )));
                }
                Some(sqrt_quadratic(metric, x_star)?)
            }
        };
        Ok(ChannelInstance {
            w,
            w_bar,
            clamp,
            affine,
        })
    }

    /// The bare channel function `g_w`.
    pub fn pure(w: Vector) -> Result<Self> {
        Self::new(w, None, None)
    }

    /// `max{g_w(0) - 1, g_w(x)}`, where `g_w(0) = -2 ||w||`.
    pub fn remark(w: Vector) -> Result<Self> {
        let level = -2.0 * w.norm() - 1.0;
        Self::new(w, Some(level), None)
    }

    /// `h_w(x) = max{-1, g_w(M^{1/2}(x - x*))}`.
    pub fn composed(w: Vector, metric: Arc<Metric>, x_star: Vector) -> Result<Self> {
        Self::new(w, Some(-1.0), Some((metric, x_star)))
    }

    pub fn w(&self) -> &Vector {
        &self.w
    }

    pub fn w_bar(&self) -> &Vector {
        &self.w_bar
    }

    pub fn clamp(&self) -> Option<f64> {
        self.clamp
    }

    pub fn metric(&self) -> Option<&Arc<Metric>> {
        self.affine.as_ref().map(|a| a.inner().metric())
    }

    pub fn x_star(&self) -> Option<&Vector> {
        self.affine.as_ref().map(|a| a.inner().x_star())
    }

    pub fn is_composed(&self) -> bool {
        self.affine.is_some()
    }

    /// `y = M^{1/2}(x - x*)`, or `x` itself without the affine part.
    pub fn affine_map(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.w.dim())?;
        match &self.affine {
            None => Ok(x.clone()),
            Some(a) => a.inner().metric().apply_sqrt(&(x - a.inner().x_star())),
        }
    }

    /// Pulls a gradient with respect to `y` back to `x`.
    fn pull_back(&self, g: Vector) -> Result<Vector> {
        match &self.affine {
            None => Ok(g),
            Some(a) => a.inner().metric().apply_sqrt(&g),
        }
    }

    /// Unclamped value of `g_w` at `y` (used for reference values such as `g_w(0)`).
    pub fn unclamped_value(&self, x: &Vector) -> Result<f64> {
        let y = self.affine_map(x)?;
        let z = &y + &self.w;
        let hinge = 4.0 * self.w_bar.dot(&z) - 2.0 * z.norm();
        Ok(y.norm() - hinge.max(0.0))
    }

    fn parts(&self, x: &Vector) -> Result<Parts> {
        let y = self.affine_map(x)?;
        let y_norm = y.norm();
        let z = &y + &self.w;
        let z_norm = z.norm();
        let hinge = 4.0 * self.w_bar.dot(&z) - 2.0 * z_norm;

        let region = if y_norm <= REGION_TOL {
            Region::Origin
        } else if z_norm <= REGION_TOL {
            Region::MinusW
        } else if hinge.abs() <= REGION_TOL {
            Region::HingeBoundary
        } else if hinge > 0.0 {
            Region::HingeActive
        } else {
            Region::HingeInactive
        };

        // The ||y|| term and its gradient with respect to x.
        let (base_value, base_grad) = match &self.affine {
            None if y_norm > 0.0 => (y_norm, y.scaled(1.0 / y_norm)),
            None => (0.0, Vector::zeros(y.dim())),
            Some(a) => {
                let r = a.eval(x)?;
                (r.value, r.subgrad)
            }
        };
        let value = base_value - hinge.max(0.0);
        let subgrad = match region {
            Region::Origin => self.pull_back(self.w_bar.scaled(-2.0))?,
            Region::MinusW => self.pull_back(self.w_bar.scaled(-3.0))?,
            Region::HingeBoundary | Region::HingeInactive => base_grad,
            _ => {
                let bend = &self.w_bar.scaled(4.0) - &z.scaled(2.0 / z_norm);
                &base_grad - &self.pull_back(bend)?
            }
        };

        let Some(level) = self.clamp else {
            return Ok(Parts { region, value, subgrad });
        };
        if value < level - REGION_TOL {
            Ok(Parts {
                region: Region::ClampActive,
                value: level,
                subgrad: Vector::zeros(x.dim()),
            })
        } else if (value - level).abs() <= REGION_TOL {
            Ok(Parts {
                region: Region::ClampBoundary,
                value: value.max(level),
                subgrad,
            })
        } else {
            Ok(Parts { region, value, subgrad })
        }
    }
}

/// Region of `x` for the instance (after the affine map, when present).
pub fn region_classify(c: &ChannelInstance, x: &Vector) -> Result<Region> {
    Ok(c.parts(x)?.region)
}

impl Function for ChannelInstance {
    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        let p = self.parts(x)?;
        Ok(FirstOrderReply {
            value: p.value,
            subgrad: p.subgrad,
            differentiable: p.region.is_differentiable(),
        })
    }

    fn lipschitz(&self) -> f64 {
        7.0
    }

    fn name(&self) -> &'static str {
        match (self.affine.is_some(), self.clamp.is_some()) {
            (true, _) => "channel_composed",
            (false, true) => "channel_clamped",
            (false, false) => "channel",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::HardQuadratic;
    use crate::rng::RngStream;
    use crate::vectorspace::{sample_ball, sample_sphere};

    fn v(e: &[f64]) -> Vector {
        Vector::from_slice(e)
    }

    /// Direct evaluation of the channel formulas, independent of the instance code.
    fn reference(w: &[f64], x: &[f64]) -> (f64, Vec<f64>) {
        let wn = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let wb = [w[0] / wn, w[1] / wn];
        let z = [x[0] + w[0], x[1] + w[1]];
        let zn = (z[0] * z[0] + z[1] * z[1]).sqrt();
        let xn = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let active = wb[0] * z[0] + wb[1] * z[1] > 0.5 * zn;
        let hinge = (4.0 * (wb[0] * z[0] + wb[1] * z[1]) - 2.0 * zn).max(0.0);
        let mut g = vec![x[0] / xn, x[1] / xn];
        if active {
            g[0] -= 4.0 * wb[0] - 2.0 * z[0] / zn;
            g[1] -= 4.0 * wb[1] - 2.0 * z[1] / zn;
        }
        (xn - hinge, g)
    }

    #[test]
    fn examples() {
        let c = ChannelInstance::pure(v(&[0.3, 0.0])).unwrap();
        let r = c.eval(&v(&[0.0, 1.0])).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.subgrad, v(&[0.0, 1.0]));
        assert_eq!(region_classify(&c, &v(&[0.0, 1.0])).unwrap(), Region::HingeInactive);
        assert_eq!(region_classify(&c, &Vector::zeros(2)).unwrap(), Region::Origin);
        assert_eq!(region_classify(&c, &v(&[-0.3, 0.0])).unwrap(), Region::MinusW);

        // g_w(3, 0) = 3 - (4 * 3.3 - 2 * 3.3) = -3.6, clamped to -1.
        assert!((c.eval(&v(&[3.0, 0.0])).unwrap().value + 3.6).abs() < 1e-14);
        let clamped = ChannelInstance::new(v(&[0.3, 0.0]), Some(-1.0), None).unwrap();
        let r = clamped.eval(&v(&[3.0, 0.0])).unwrap();
        assert_eq!(r.value, -1.0);
        assert!(r.subgrad.is_zero());
        assert_eq!(region_classify(&clamped, &v(&[3.0, 0.0])).unwrap(), Region::ClampActive);

        // Value at the origin is -2 ||w||.
        assert!((c.eval(&Vector::zeros(2)).unwrap().value + 0.6).abs() < 1e-15);
        assert!(ChannelInstance::pure(Vector::zeros(2)).is_err());
    }

    #[test]
    fn canonical_elements() {
        let c = ChannelInstance::pure(v(&[0.0, 0.5])).unwrap();
        let at0 = c.eval(&Vector::zeros(2)).unwrap();
        assert_eq!(at0.subgrad, v(&[0.0, -2.0]));
        assert!(!at0.differentiable);
        let at_w = c.eval(&v(&[0.0, -0.5])).unwrap();
        assert_eq!(at_w.subgrad, v(&[0.0, -3.0]));
        // A hinge-boundary point: wbar^T zbar = 1/2, i.e. z at 60 degrees from w.
        let angle = std::f64::consts::FRAC_PI_3;
        let z = v(&[angle.sin(), angle.cos()]).scaled(2.0);
        let x = &z - c.w();
        assert_eq!(region_classify(&c, &x).unwrap(), Region::HingeBoundary);
        let r = c.eval(&x).unwrap();
        assert!(!r.differentiable);
        assert!((&r.subgrad - &x.scaled(1.0 / x.norm())).norm() < 1e-15);
    }

    #[test]
    fn matches_reference_and_finite_differences() {
        let w = [0.3, -0.2];
        let c = ChannelInstance::pure(v(&w)).unwrap();
        let mut rng = RngStream::from_seed(21);
        let h = 1e-6;
        for _ in 0..2000 {
            let x = sample_ball(2, 2.0, &mut rng).unwrap();
            let r = c.eval(&x).unwrap();
            let (val, g) = reference(&w, x.as_slice());
            assert!((r.value - val).abs() < 1e-14);
            if !r.differentiable {
                continue;
            }
            assert!((r.subgrad[0] - g[0]).abs() < 1e-13 && (r.subgrad[1] - g[1]).abs() < 1e-13);
            assert!(r.subgrad.norm() >= 1.0 - 1e-9);
            // Skip points near a kink for the finite-difference comparison.
            let z = &x + c.w();
            let hinge = 4.0 * c.w_bar().dot(&z) - 2.0 * z.norm();
            if x.norm() < 1e-5 || z.norm() < 1e-5 || hinge.abs() < 1e-4 {
                continue;
            }
            for i in 0..2 {
                let mut xp = x.clone();
                xp.as_mut_slice()[i] += h;
                let mut xm = x.clone();
                xm.as_mut_slice()[i] -= h;
                let fd = (c.eval(&xp).unwrap().value - c.eval(&xm).unwrap().value) / (2.0 * h);
                assert!((fd - r.subgrad[i]).abs() <= 1e-4 * r.subgrad.norm());
            }
        }
    }

    #[test]
    fn remark_symmetric_pair_cancels() {
        for delta in [0.05, 0.1] {
            let w = v(&[0.0, delta / 2.0]);
            let c = ChannelInstance::remark(w).unwrap();
            let vv = v(&[delta, 0.0]);
            let a = c.eval(&vv).unwrap();
            let b = c.eval(&-&vv).unwrap();
            assert_eq!(a.subgrad, v(&[1.0, 0.0]));
            let mid = (&a.subgrad + &b.subgrad).scaled(0.5);
            assert!(mid.norm() <= 1e-12);
        }
    }

    #[test]
    fn composed_bounds_and_equality_region() {
        let t = 6;
        let d = 12;
        let hq = HardQuadratic::new(t, d).unwrap();
        let metric = Arc::new(hq.metric());
        let mut rng = RngStream::from_seed(2);
        let w = sample_sphere(d, (-(t as f64)).exp() / 300.0, &mut rng).unwrap();
        let h = ChannelInstance::composed(w.clone(), metric.clone(), hq.x_star().clone()).unwrap();
        let f = sqrt_quadratic(metric.clone(), hq.x_star().clone()).unwrap();

        let at0 = h.eval(&Vector::zeros(d)).unwrap();
        assert!(at0.value <= 0.5);
        let mut checked = 0;
        while checked < 2000 {
            let x = &sample_ball(d, 1.0, &mut rng).unwrap() + hq.x_star();
            let y = h.affine_map(&x).unwrap();
            let z = &y + &w;
            if h.w_bar().dot(&z) > 0.5 * z.norm() {
                continue;
            }
            let a = h.eval(&x).unwrap();
            let b = f.eval(&x).unwrap();
            assert!(a.bitwise_eq(&b));
            assert!(a.value >= -1.0);
            checked += 1;
        }
    }
}
