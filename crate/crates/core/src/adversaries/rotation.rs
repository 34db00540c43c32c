//! The resisting oracle for deterministic algorithms: the chain quadratic in
//! coordinates `u_1..u_T` that are chosen lazily, each one orthogonal to
//! every query seen so far.

use std::sync::Arc;

use super::chain::{rotated_minimizer, ChainMetric, HardQuadratic, Metric, RotatedChainMetric};
use crate::error::{Error, Result};
use crate::oracle_game::Oracle;
use crate::vectorspace::{extend_orthonormal, OrthonormalFrame, Vector};
use crate::zoo::{FirstOrderReply, Function, ShiftedQuadratic};

/// Value and gradient of `g(Ux)` given the frame coordinates `c_i = u_i^T x`
/// (zero for directions not yet chosen) and the residual of `x` off the frame.
fn rotated_reply(base: &HardQuadratic, frame: &[Vector], c: &[f64], x: &Vector) -> FirstOrderReply {
    let t = base.t();
    let metric = base.chain_metric();
    let e: Vec<f64> = (0..t).map(|i| c[i] - base.x_star()[i]).collect();
    let mut residual = x.clone();
    for (u, ci) in frame.iter().zip(c) {
        residual.axpy(-ci, u);
    }
    let e_sq: f64 = e.iter().map(|v| v * v).sum();
    let value = metric.block_a_form(&e) / 8.0 + 0.5 * (e_sq + residual.norm_squared());

    let ac = metric.block_a(c);
    let mut grad = x.clone();
    for (i, u) in frame.iter().enumerate() {
        let coef = ac[i] / 4.0 - if i == 0 { 0.25 } else { 0.0 };
        grad.axpy(coef, u);
    }
    FirstOrderReply::smooth(value, grad)
}

/// Stateful oracle answering queries of `g(Ux)` while committing to `U` one
/// column per query.
#[derive(Clone, Debug)]
pub struct RotationOracle {
    base: HardQuadratic,
    frame: OrthonormalFrame,
    seen: Vec<Vector>,
}

impl RotationOracle {
    /// Requires `d >= 2T`.
    pub fn new(base: HardQuadratic) -> Result<Self> {
        if base.d() < 2 * base.t() {
            return Err(Error::InvalidParameter(format!(
                "rotation oracle needs d >= 2T, got d = {}, T = {}",
                base.d(),
                base.t()
            )));
        }
        let frame = OrthonormalFrame::new(base.d());
        Ok(RotationOracle {
            base,
            frame,
            seen: Vec::new(),
        })
    }

    pub fn base(&self) -> &HardQuadratic {
        &self.base
    }

    pub fn frame(&self) -> &OrthonormalFrame {
        &self.frame
    }

    pub fn queries(&self) -> &[Vector] {
        &self.seen
    }

    /// Commits to the remaining directions (orthogonal to all queries) and
    /// returns the fully specified rotated quadratic.
    pub fn materialize(&self) -> Result<RotatedQuadratic> {
        let mut frame = self.frame.clone();
        while frame.len() < self.base.t() {
            let u = extend_orthonormal(&frame, &self.seen)?;
            frame.push(u)?;
        }
        RotatedQuadratic::new(self.base.clone(), frame.vectors().to_vec())
    }
}

impl Oracle for RotationOracle {
    fn dim(&self) -> usize {
        self.base.d()
    }

    fn query(&mut self, x: &Vector) -> Result<FirstOrderReply> {
        let t_max = self.base.t();
        if self.seen.len() >= t_max {
            return Err(Error::BudgetExhausted { budget: t_max });
        }
        x.check_dim(self.base.d())?;
        let mut avoid = self.seen.clone();
        avoid.push(x.clone());
        let u = extend_orthonormal(&self.frame, &avoid)?;
        self.frame.push(u)?;
        self.seen.push(x.clone());

        let mut c = vec![0.0; t_max];
        for (ci, u) in c.iter_mut().zip(self.frame.vectors()) {
            *ci = u.dot(x);
        }
        Ok(rotated_reply(&self.base, self.frame.vectors(), &c, x))
    }
}

/// `g(Ux)` with all `T` directions fixed.
#[derive(Clone, Debug)]
pub struct RotatedQuadratic {
    base: HardQuadratic,
    frame: Vec<Vector>,
    x_star: Vector,
}

impl RotatedQuadratic {
    pub fn new(base: HardQuadratic, frame: Vec<Vector>) -> Result<Self> {
        OrthonormalFrame::from_vectors(base.d(), frame.clone())?;
        if frame.len() != base.t() {
            return Err(Error::InvalidParameter(format!(
                "need T = {} frame vectors, got {}",
                base.t(),
                frame.len()
            )));
        }
        let x_star = rotated_minimizer(&base, &frame);
        Ok(RotatedQuadratic { base, frame, x_star })
    }

    pub fn frame(&self) -> &[Vector] {
        &self.frame
    }

    /// `U^T x* = sum_i q^i u_i`.
    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }

    pub fn base(&self) -> &HardQuadratic {
        &self.base
    }

    /// The rotated metric `U^T M U`.
    pub fn metric(&self) -> Result<Metric> {
        let base = ChainMetric::new(self.base.params())?;
        Ok(Metric::Rotated(RotatedChainMetric::new(base, self.frame.clone())?))
    }

    /// The same function as `(x - x~*)^T M~ (x - x~*)`.
    pub fn as_shifted_quadratic(&self) -> Result<ShiftedQuadratic> {
        ShiftedQuadratic::new(Arc::new(self.metric()?), self.x_star.clone())
    }
}

impl Function for RotatedQuadratic {
    fn dim(&self) -> usize {
        self.base.d()
    }

    fn eval(&self, x: &Vector) -> Result<FirstOrderReply> {
        x.check_dim(self.base.d())?;
        let c: Vec<f64> = self.frame.iter().map(|u| u.dot(x)).collect();
        Ok(rotated_reply(&self.base, &self.frame, &c, x))
    }

    fn lipschitz(&self) -> f64 {
        self.base.lipschitz()
    }

    fn name(&self) -> &'static str {
        "rotated_chain_quadratic"
    }
}

/// Relative discrepancy between two replies: value difference over the
/// value, gradient difference over the gradient norm (each floored at the
/// smallest positive normal double to stay finite).
pub fn reply_relative_error(a: &FirstOrderReply, b: &FirstOrderReply) -> f64 {
    let floor = f64::MIN_POSITIVE;
    let dv = (a.value - b.value).abs() / a.value.abs().max(b.value.abs()).max(floor);
    let dg = (&a.subgrad - &b.subgrad).norm() / a.subgrad.norm().max(b.subgrad.norm()).max(floor);
    dv.max(dg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle_game::play;
    use crate::rng::RngStream;
    use crate::solvers::{default_span_schedule, subgradient_method};

    #[test]
    fn first_reply_closed_form() {
        let hq = HardQuadratic::new(3, 6).unwrap();
        let mut o = RotationOracle::new(hq.clone()).unwrap();
        let x1 = Vector::from_slice(&[0.2, -0.1, 0.0, 0.3, 0.0, 0.05]);
        let r = o.query(&x1).unwrap();
        let u1 = o.frame().get(0).clone();
        assert!(u1.dot(&x1).abs() < 1e-15);
        let expect = &x1 - &u1.scaled(0.25);
        assert!((&r.subgrad - &expect).norm() < 1e-15);
        assert!((r.value - (0.5 * x1.norm_squared() + hq.b())).abs() < 1e-15);
    }

    #[test]
    fn budget_and_dimension_are_enforced() {
        assert!(RotationOracle::new(HardQuadratic::new(3, 5).unwrap()).is_err());
        let mut o = RotationOracle::new(HardQuadratic::new(2, 4).unwrap()).unwrap();
        o.query(&Vector::zeros(4)).unwrap();
        o.query(&Vector::zeros(4)).unwrap();
        assert!(matches!(o.query(&Vector::zeros(4)), Err(Error::BudgetExhausted { budget: 2 })));
    }

    #[test]
    fn materialized_function_reproduces_replies() {
        for t in [2, 5, 8] {
            let hq = HardQuadratic::new(t, 2 * t).unwrap();
            let mut o = RotationOracle::new(hq).unwrap();
            let desc = subgradient_method(default_span_schedule());
            let tr = play(&desc, &mut o, t, 2 * t, &mut RngStream::from_seed(0)).unwrap();
            let g = o.materialize().unwrap();
            let last = g.frame().last().unwrap();
            let shifted = g.as_shifted_quadratic().unwrap();
            for e in tr.entries() {
                assert!(last.dot(&e.query).abs() <= 1e-10);
                let direct = g.eval(&e.query).unwrap();
                assert!(reply_relative_error(&direct, &e.reply) <= 1e-12);
                let other = shifted.eval(&e.query).unwrap();
                assert!((other.value - direct.value).abs() <= 1e-14);
                assert!((&other.subgrad - &direct.subgrad).norm() <= 1e-14);
            }
        }
    }
}
