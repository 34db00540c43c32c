use super::{FirstOrderReply, Function};
use crate::error::Result;
use crate::vectorspace::Vector;

/// `f(u, v) = ||u| + v| + u / 2`, whose Clarke subdifferential at the origin
/// contains zero while the point is not a local minimum.
///
/// Subgradients use `sign(0) = 0`, which picks the midpoint of each kink.
#[derive(Clone, Copy, Debug, Default)]
pub struct Warga;

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Function for Warga {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        x.check_dim(2)?;
        let (u, v) = (x[0], x[1]);
        let inner = u.abs() + v;
        let value = inner.abs() + 0.5 * u;
        let outer = sign(inner);
        let grad = Vector::from_slice(&[outer * sign(u) + 0.5, outer]);
        Ok(FirstOrderReply {
            value,
            subgrad: grad,
            differentiable: u != 0.0 && inner != 0.0,
        })
    }

    fn lipschitz(&self) -> f64 {
        // |grad| <= sqrt(1.5^2 + 1).
        (1.5f64 * 1.5 + 1.0).sqrt()
    }

    fn name(&self) -> &'static str {
        "warga"
    }
}
