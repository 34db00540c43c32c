use std::f64::consts::PI;

use super::{FirstOrderReply, Function};
use crate::error::{Error, Result};
use crate::vectorspace::Vector;

/// Radial tolerance for the seams of the extended variant.
pub const SEAM_TOL: f64 = 1e-12;

/// `f(u, v) = (2 delta + u) sin(pi v / (2 delta))`: gradient norm at least 1
/// on the `delta`-ball, yet the origin is `(delta, 0)`-stationary.
///
/// With `extended`, points outside the `2 delta`-ball are mapped radially back
/// onto its boundary and damped by `max(0, 2 - |x| / (2 delta))`, making the
/// function globally Lipschitz and zero beyond radius `4 delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spiral {
    delta: f64,
    extended: bool,
}

impl Spiral {
    pub fn new(delta: f64, extended: bool) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidParameter(format!("spiral delta must be positive, got {delta}")));
        }
        Ok(Spiral { delta, extended })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn extended(&self) -> bool {
        self.extended
    }

    fn inner(&self, u: f64, v: f64) -> (f64, [f64; 2]) {
        let w = PI / (2.0 * self.delta);
        let (s, c) = (w * v).sin_cos();
        let a = 2.0 * self.delta + u;
        (a * s, [s, w * a * c])
    }
}

impl Function for Spiral {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        x.check_dim(2)?;
        let (u, v) = (x[0], x[1]);
        let inner_radius = 2.0 * self.delta;
        let r = u.hypot(v);
        if !self.extended || r < inner_radius - SEAM_TOL {
            let (value, g) = self.inner(u, v);
            return Ok(FirstOrderReply::smooth(value, Vector::from_slice(&g)));
        }
        if r <= inner_radius + SEAM_TOL {
            // Inner-branch limit on the first seam.
            let (value, g) = self.inner(u, v);
            return Ok(FirstOrderReply::kink(value, Vector::from_slice(&g)));
        }

        let ratio = inner_radius / r;
        let (yu, yv) = (ratio * u, ratio * v);
        let (fy, gy) = self.inner(yu, yv);
        let outer_radius = 4.0 * self.delta;
        if r > outer_radius + SEAM_TOL {
            return Ok(FirstOrderReply::smooth(0.0, Vector::zeros(2)));
        }

        let scale = 2.0 - r / inner_radius;
        let (xu, xv) = (u / r, v / r);
        // J = (2 delta / r)(I - xbar xbar^T) is symmetric, so J^T grad f(y) = J grad f(y).
        let along = xu * gy[0] + xv * gy[1];
        let jt = [ratio * (gy[0] - along * xu), ratio * (gy[1] - along * xv)];
        let ds = [-xu / inner_radius, -xv / inner_radius];
        if r >= outer_radius - SEAM_TOL {
            // Inner-branch limit on the outer seam; the value there is zero.
            let grad = [ds[0] * fy + scale * jt[0], ds[1] * fy + scale * jt[1]];
            return Ok(FirstOrderReply::kink(scale.max(0.0) * fy, Vector::from_slice(&grad)));
        }
        let value = scale * fy;
        let grad = [ds[0] * fy + scale * jt[0], ds[1] * fy + scale * jt[1]];
        Ok(FirstOrderReply::smooth(value, Vector::from_slice(&grad)))
    }

    fn lipschitz(&self) -> f64 {
        if self.extended {
            2.0 + 2.0 * PI
        } else {
            2.0 * PI
        }
    }

    fn name(&self) -> &'static str {
        if self.extended {
            "spiral_extended"
        } else {
            "spiral"
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::vectorspace::sample_ball;

    fn v(u: f64, w: f64) -> Vector {
        Vector::from_slice(&[u, w])
    }

    #[test]
    fn examples() {
        let s = Spiral::new(1.0, false).unwrap();
        let top = s.eval(&v(0.0, 1.0)).unwrap();
        assert!((top.value - 2.0).abs() < 1e-15);
        assert!((top.subgrad[0] - 1.0).abs() < 1e-15 && top.subgrad[1].abs() < 1e-15);

        let origin = s.eval(&v(0.0, 0.0)).unwrap();
        assert_eq!(origin.value, 0.0);
        assert!((origin.subgrad[1] - PI).abs() < 1e-15 && origin.subgrad[0] == 0.0);

        let bottom = s.eval(&v(0.0, -1.0)).unwrap();
        assert!((bottom.subgrad[0] + 1.0).abs() < 1e-15 && bottom.subgrad[1].abs() < 1e-15);
        assert!(Spiral::new(0.0, false).is_err());
        assert!(s.eval(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn extension_agrees_inside_and_vanishes_outside() {
        let plain = Spiral::new(0.5, false).unwrap();
        let ext = Spiral::new(0.5, true).unwrap();
        let mut rng = RngStream::from_seed(3);
        for _ in 0..1000 {
            let x = sample_ball(2, 0.99, &mut rng).unwrap();
            assert_eq!(plain.eval(&x).unwrap(), ext.eval(&x).unwrap());
        }
        let far = ext.eval(&v(2.5, 0.1)).unwrap();
        assert_eq!(far.value, 0.0);
        assert!(far.subgrad.is_zero());
        let seam = ext.eval(&v(0.0, 1.0)).unwrap();
        assert!(!seam.differentiable);
    }

    #[test]
    fn extension_gradient_matches_finite_differences() {
        let ext = Spiral::new(1.0, true).unwrap();
        let mut rng = RngStream::from_seed(11);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 500 {
            let x = sample_ball(2, 4.0, &mut rng).unwrap();
            let r = x.norm();
            if (r - 2.0).abs() < 1e-4 || (r - 4.0).abs() < 1e-4 || r < 2.0 {
                continue;
            }
            let g = ext.eval(&x).unwrap().subgrad;
            for i in 0..2 {
                let mut xp = x.clone();
                xp.as_mut_slice()[i] += h;
                let mut xm = x.clone();
                xm.as_mut_slice()[i] -= h;
                let fd = (ext.eval(&xp).unwrap().value - ext.eval(&xm).unwrap().value) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-4 * g.norm().max(1.0), "{x:?}");
            }
            assert!(g.norm() <= ext.lipschitz() + 1e-9);
            checked += 1;
        }
    }
}
