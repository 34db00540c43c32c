//! Representative first-order methods, each a recipe that the oracle game
//! turns into a running [`Algorithm`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle_game::{Algorithm, AlgorithmClass, AlgorithmDescriptor, Step};
use crate::rng::RngStream;
use crate::stationarity::min_norm_point;
use crate::vectorspace::{sample_ball, Vector};
use crate::zoo::{FirstOrderReply, Function};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    InverseSqrt,
    ExactLineSearchQuadratic,
}

/// Step sizes `eta_t`; `scale` is the constant, the numerator of
/// `scale / sqrt(t)`, or the probe length of the quadratic line search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub kind: ScheduleKind,
    pub scale: f64,
}

impl StepSchedule {
    pub fn constant(scale: f64) -> Self {
        StepSchedule {
            kind: ScheduleKind::Constant,
            scale,
        }
    }

    pub fn inverse_sqrt(scale: f64) -> Self {
        StepSchedule {
            kind: ScheduleKind::InverseSqrt,
            scale,
        }
    }

    pub fn exact(probe: f64) -> Self {
        StepSchedule {
            kind: ScheduleKind::ExactLineSearchQuadratic,
            scale: probe,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidParameter(format!("step scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    /// Step size for the `t`-th step, `t >= 1`.
    pub fn eta(&self, t: usize) -> f64 {
        match self.kind {
            ScheduleKind::InverseSqrt => self.scale / (t as f64).sqrt(),
            _ => self.scale,
        }
    }
}

/// Default for nonsmooth runs.
pub fn default_nonsmooth_schedule() -> StepSchedule {
    StepSchedule::constant(0.1)
}

/// Default span-class representative.
pub fn default_span_schedule() -> StepSchedule {
    StepSchedule::inverse_sqrt(1.0)
}

pub const DEFAULT_PROBE_STEP: f64 = 1.0;
pub const DEFAULT_GOLDSTEIN_SAMPLES: usize = 32;

/// Step logic of the bundled methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverLogic {
    /// Queries one fixed point forever.
    Constant { point: Vector },
    Subgrad { schedule: StepSchedule },
    /// Quadratic line search: one probe value per step.
    Steepest { probe_step: f64 },
    Smoothed {
        delta: f64,
        samples_per_step: usize,
        schedule: StepSchedule,
    },
    Goldstein {
        delta: f64,
        samples_per_step: usize,
        schedule: StepSchedule,
        eps: f64,
        /// Fixed offsets replacing ball sampling.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stencil: Option<Vec<Vector>>,
    },
}

impl SolverLogic {
    pub fn name(&self) -> &'static str {
        match self {
            SolverLogic::Constant { .. } => "constant",
            SolverLogic::Subgrad { .. } => "subgrad",
            SolverLogic::Steepest { .. } => "steepest",
            SolverLogic::Smoothed { .. } => "smoothed",
            SolverLogic::Goldstein { .. } => "goldstein",
        }
    }

    pub fn uses_randomness(&self) -> bool {
        match self {
            SolverLogic::Smoothed { .. } => true,
            SolverLogic::Goldstein { stencil, .. } => stencil.is_none(),
            _ => false,
        }
    }

    pub fn is_span_method(&self) -> bool {
        matches!(self, SolverLogic::Subgrad { .. } | SolverLogic::Steepest { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            SolverLogic::Constant { .. } => Ok(()),
            SolverLogic::Subgrad { schedule } => schedule.validate(),
            SolverLogic::Steepest { probe_step } => positive("probe_step", *probe_step),
            SolverLogic::Smoothed {
                delta,
                samples_per_step,
                schedule,
            } => {
                positive("delta", *delta)?;
                if *samples_per_step == 0 {
                    return Err(Error::InvalidParameter("samples_per_step must be at least 1".into()));
                }
                schedule.validate()
            }
            SolverLogic::Goldstein {
                delta,
                samples_per_step,
                schedule,
                eps,
                stencil,
            } => {
                positive("delta", *delta)?;
                if !(eps.is_finite() && *eps >= 0.0) {
                    return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
                }
                match stencil {
                    Some(s) if s.iter().any(|o| o.norm() > *delta) => {
                        Err(Error::InvalidParameter("stencil offsets must lie in the delta-ball".into()))
                    }
                    None if *samples_per_step == 0 => {
                        Err(Error::InvalidParameter("samples_per_step must be at least 1".into()))
                    }
                    _ => schedule.validate(),
                }
            }
        }
    }

    pub(crate) fn instantiate(&self, x1: Vector) -> Box<dyn Algorithm> {
        match self.clone() {
            SolverLogic::Constant { point } => Box::new(ConstantRun { point }),
            SolverLogic::Subgrad { schedule } => Box::new(SubgradRun { x: x1, schedule, step: 0 }),
            SolverLogic::Steepest { probe_step } => Box::new(SteepestRun {
                x: x1,
                probe_step,
                pending: None,
            }),
            SolverLogic::Smoothed {
                delta,
                samples_per_step,
                schedule,
            } => Box::new(SmoothedRun {
                x: x1,
                delta,
                samples: samples_per_step,
                schedule,
                step: 0,
                sum: None,
                collected: 0,
            }),
            SolverLogic::Goldstein {
                delta,
                samples_per_step,
                schedule,
                eps,
                stencil,
            } => Box::new(GoldsteinRun {
                x: x1,
                delta,
                samples: samples_per_step,
                schedule,
                eps,
                stencil,
                step: 0,
                gathered: Vec::new(),
                planned: Vec::new(),
            }),
        }
    }
}

/// Degenerate algorithm querying `point` every round.
pub fn constant_algorithm(point: Vector) -> AlgorithmDescriptor {
    AlgorithmDescriptor::new(AlgorithmClass::Deterministic, SolverLogic::Constant { point: point.clone() })
        .with_initial_point(point)
}

/// `x_{t+1} = x_t - eta_t g_t` from the origin; an exact-line-search
/// schedule yields [`steepest_descent_exact`] with that probe length.
pub fn subgradient_method(schedule: StepSchedule) -> AlgorithmDescriptor {
    if schedule.kind == ScheduleKind::ExactLineSearchQuadratic {
        return steepest_descent_exact(schedule.scale);
    }
    AlgorithmDescriptor::new(AlgorithmClass::LinearSpan, SolverLogic::Subgrad { schedule })
}

/// Steepest descent with the step minimizing the quadratic through the
/// current value, the slope `-||g||^2` and one probe value at `x - s g`.
/// Each step costs two queries.
pub fn steepest_descent_exact(probe_step: f64) -> AlgorithmDescriptor {
    AlgorithmDescriptor::new(AlgorithmClass::LinearSpan, SolverLogic::Steepest { probe_step })
}

/// Steps along the average of subgradients at `x_t + delta u_i`, `u_i`
/// uniform in the unit ball; every sample is one query.
pub fn smoothed_gradient_method(delta: f64, samples_per_step: usize, schedule: StepSchedule) -> AlgorithmDescriptor {
    AlgorithmDescriptor::new(
        AlgorithmClass::Randomized,
        SolverLogic::Smoothed {
            delta,
            samples_per_step,
            schedule,
        },
    )
}

/// Queries the center and `samples_per_step` points of its `delta`-ball,
/// steps along minus the min-norm element of their subgradient hull, and
/// stops once that norm is at most `eps`.
pub fn goldstein_descent(delta: f64, samples_per_step: usize, schedule: StepSchedule, eps: f64) -> AlgorithmDescriptor {
    AlgorithmDescriptor::new(
        AlgorithmClass::Randomized,
        SolverLogic::Goldstein {
            delta,
            samples_per_step,
            schedule,
            eps,
            stencil: None,
        },
    )
}

/// [`goldstein_descent`] with fixed offsets instead of random samples;
/// deterministic.
pub fn goldstein_stencil(delta: f64, stencil: Vec<Vector>, schedule: StepSchedule, eps: f64) -> AlgorithmDescriptor {
    AlgorithmDescriptor::new(
        AlgorithmClass::Deterministic,
        SolverLogic::Goldstein {
            delta,
            samples_per_step: stencil.len(),
            schedule,
            eps,
            stencil: Some(stencil),
        },
    )
}

struct ConstantRun {
    point: Vector,
}

impl Algorithm for ConstantRun {
    fn first_query(&mut self, _: &mut RngStream) -> Result<Vector> {
        Ok(self.point.clone())
    }

    fn observe(&mut self, _: &Vector, _: &FirstOrderReply, _: &mut RngStream) -> Result<Step> {
        Ok(Step::Query(self.point.clone()))
    }
}

struct SubgradRun {
    x: Vector,
    schedule: StepSchedule,
    step: usize,
}

impl Algorithm for SubgradRun {
    fn first_query(&mut self, _: &mut RngStream) -> Result<Vector> {
        Ok(self.x.clone())
    }

    fn observe(&mut self, _: &Vector, reply: &FirstOrderReply, _: &mut RngStream) -> Result<Step> {
        self.step += 1;
        self.x.axpy(-self.schedule.eta(self.step), &reply.subgrad);
        Ok(Step::Query(self.x.clone()))
    }
}

struct SteepestRun {
    x: Vector,
    probe_step: f64,
    /// Value and gradient at `x` while the probe is outstanding.
    pending: Option<(f64, Vector)>,
}

impl Algorithm for SteepestRun {
    fn first_query(&mut self, _: &mut RngStream) -> Result<Vector> {
        Ok(self.x.clone())
    }

    fn observe(&mut self, _: &Vector, reply: &FirstOrderReply, _: &mut RngStream) -> Result<Step> {
        match self.pending.take() {
            None => {
                if reply.subgrad.is_zero() {
                    return Ok(Step::Query(self.x.clone()));
                }
                let probe = {
                    let mut p = self.x.clone();
                    p.axpy(-self.probe_step, &reply.subgrad);
                    p
                };
                self.pending = Some((reply.value, reply.subgrad.clone()));
                Ok(Step::Query(probe))
            }
            Some((f0, g)) => {
                let s = self.probe_step;
                let gg = g.norm_squared();
                let curvature = 2.0 * (reply.value - f0 + s * gg) / (s * s);
                if !curvature.is_finite() || curvature <= 0.0 {
                    return Err(Error::NonFinite(format!(
                        "line-search curvature {curvature:e} is not a positive finite number"
                    )));
                }
                self.x.axpy(-gg / curvature, &g);
                Ok(Step::Query(self.x.clone()))
            }
        }
    }
}

struct SmoothedRun {
    x: Vector,
    delta: f64,
    samples: usize,
    schedule: StepSchedule,
    step: usize,
    sum: Option<Vector>,
    collected: usize,
}

impl SmoothedRun {
    fn sample_point(&self, rng: &mut RngStream) -> Result<Vector> {
        Ok(&self.x + &sample_ball(self.x.dim(), self.delta, rng)?)
    }
}

impl Algorithm for SmoothedRun {
    fn first_query(&mut self, rng: &mut RngStream) -> Result<Vector> {
        self.sample_point(rng)
    }

    fn observe(&mut self, _: &Vector, reply: &FirstOrderReply, rng: &mut RngStream) -> Result<Step> {
        match &mut self.sum {
            Some(s) => s.axpy(1.0, &reply.subgrad),
            None => self.sum = Some(reply.subgrad.clone()),
        }
        self.collected += 1;
        if self.collected == self.samples {
            let avg = self.sum.take().expect("sum set above").scaled(1.0 / self.samples as f64);
            self.collected = 0;
            self.step += 1;
            self.x.axpy(-self.schedule.eta(self.step), &avg);
        }
        Ok(Step::Query(self.sample_point(rng)?))
    }
}

struct GoldsteinRun {
    x: Vector,
    delta: f64,
    samples: usize,
    schedule: StepSchedule,
    eps: f64,
    stencil: Option<Vec<Vector>>,
    step: usize,
    gathered: Vec<Vector>,
    /// Remaining points to query this round (popped from the back).
    planned: Vec<Vector>,
}

impl GoldsteinRun {
    fn plan(&mut self, rng: &mut RngStream) -> Result<()> {
        let mut pts = Vec::new();
        match &self.stencil {
            Some(offsets) => pts.extend(offsets.iter().map(|o| &self.x + o)),
            None => {
                for _ in 0..self.samples {
                    pts.push(&self.x + &sample_ball(self.x.dim(), self.delta, rng)?);
                }
            }
        }
        pts.reverse();
        self.planned = pts;
        self.gathered.clear();
        Ok(())
    }
}

impl Algorithm for GoldsteinRun {
    fn first_query(&mut self, rng: &mut RngStream) -> Result<Vector> {
        self.plan(rng)?;
        Ok(self.x.clone())
    }

    fn observe(&mut self, _: &Vector, reply: &FirstOrderReply, rng: &mut RngStream) -> Result<Step> {
        self.gathered.push(reply.subgrad.clone());
        if let Some(next) = self.planned.pop() {
            return Ok(Step::Query(next));
        }
        let mn = min_norm_point(&self.gathered, crate::stationarity::WOLFE_TOL)?;
        if mn.norm <= self.eps {
            return Ok(Step::Stop);
        }
        self.step += 1;
        self.x.axpy(-self.schedule.eta(self.step), &mn.point);
        self.plan(rng)?;
        Ok(Step::Query(self.x.clone()))
    }
}

/// Monte Carlo ball average of subgradients, `mean_i grad f(x + delta u_i)`,
/// over caller-supplied unit-ball draws `us`. Also returns the per-coordinate
/// standard error.
pub fn ball_average_gradient<F: Function + ?Sized>(f: &F, x: &Vector, delta: f64, us: &[Vector]) -> Result<(Vector, Vector)> {
    if us.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let d = x.dim();
    let mut sum = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for u in us {
        let g = f.eval(&(x + &u.scaled(delta)))?.subgrad;
        for i in 0..d {
            sum[i] += g[i];
            sq[i] += g[i] * g[i];
        }
    }
    let n = us.len() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se: Vec<f64> = sq
        .iter()
        .zip(&mean)
        .map(|(s, m)| ((s / n - m * m).max(0.0) * n / (n - 1.0).max(1.0) / n).sqrt())
        .collect();
    Ok((Vector::new(mean)?, Vector::new(se)?))
}

/// Monte Carlo ball average of values, `mean_i f(x + delta u_i)`.
pub fn ball_average_value<F: Function + ?Sized>(f: &F, x: &Vector, delta: f64, us: &[Vector]) -> Result<f64> {
    if us.is_empty() {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut sum = 0.0;
    for u in us {
        sum += f.eval(&(x + &u.scaled(delta)))?.value;
    }
    Ok(sum / us.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle_game::{play, validate_span, SPAN_TOL};
    use crate::zoo::{ClosureFunction, Spiral};

    fn shifted_sq(a: Vector, half: bool) -> impl Function {
        let c = if half { 0.5 } else { 1.0 };
        ClosureFunction::new(a.dim(), 10.0, move |x: &Vector| {
            let d = x - &a;
            Ok(FirstOrderReply::smooth(c * d.norm_squared(), d.scaled(2.0 * c)))
        })
    }

    #[test]
    fn subgradient_quarter_step_halves() {
        let a = Vector::from_slice(&[1.0, -2.0]);
        let mut f = shifted_sq(a.clone(), false);
        let t = play(&subgradient_method(StepSchedule::constant(0.25)), &mut f, 2, 2, &mut RngStream::from_seed(0)).unwrap();
        assert_eq!(t.entries()[1].query, a.scaled(0.5));
        assert!(validate_span(&t, SPAN_TOL).valid);
    }

    #[test]
    fn steepest_solves_isotropic_quadratic_in_one_step() {
        let a = Vector::from_slice(&[0.5, 1.5, -1.0]);
        let mut f = shifted_sq(a.clone(), true);
        let t = play(&steepest_descent_exact(DEFAULT_PROBE_STEP), &mut f, 3, 3, &mut RngStream::from_seed(0)).unwrap();
        assert!((&t.entries()[2].query - &a).norm() < 1e-15);
        assert!(validate_span(&t, SPAN_TOL).valid);
        assert_eq!(subgradient_method(StepSchedule::exact(1.0)), steepest_descent_exact(1.0));
    }

    #[test]
    fn steepest_rejects_concave_probe() {
        let mut f = ClosureFunction::new(1, 10.0, |x: &Vector| Ok(FirstOrderReply::smooth(-x.norm_squared() + x[0], Vector::from_slice(&[1.0 - 2.0 * x[0]]))));
        let err = play(&steepest_descent_exact(1.0), &mut f, 5, 1, &mut RngStream::from_seed(0)).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn smoothed_average_on_linear_is_exact() {
        let c = Vector::from_slice(&[0.25, -0.5]);
        let cc = c.clone();
        let f = ClosureFunction::new(2, 1.0, move |x: &Vector| Ok(FirstOrderReply::smooth(cc.dot(x), cc.clone())));
        let mut rng = RngStream::from_seed(4);
        let us: Vec<Vector> = (0..50).map(|_| sample_ball(2, 1.0, &mut rng).unwrap()).collect();
        for delta in [0.01, 1.0, 7.0] {
            let (g, _) = ball_average_gradient(&f, &Vector::zeros(2), delta, &us).unwrap();
            assert_eq!(g, c);
        }
    }

    #[test]
    fn smoothed_method_counts_samples_against_budget() {
        let mut f = Spiral::new(1.0, true).unwrap();
        let desc = smoothed_gradient_method(0.5, 4, default_nonsmooth_schedule());
        let t = play(&desc, &mut f, 10, 2, &mut RngStream::derive(7, "algorithm")).unwrap();
        assert_eq!(t.len(), 10);
        // Samples of the first step all lie in the 0.5-ball around the origin.
        assert!(t.queries().take(4).all(|q| q.norm() <= 0.5));
    }

    #[test]
    fn goldstein_examples() {
        // Spiral origin with stencil (0, +-1): stops after one round.
        let mut s = Spiral::new(1.0, false).unwrap();
        let stencil = vec![Vector::from_slice(&[0.0, 1.0]), Vector::from_slice(&[0.0, -1.0])];
        let desc = goldstein_stencil(1.0, stencil, default_nonsmooth_schedule(), 1e-8);
        let t = play(&desc, &mut s, 10, 2, &mut RngStream::from_seed(0)).unwrap();
        assert_eq!(t.len(), 3);
        let grads: Vec<Vector> = t.entries().iter().map(|e| e.reply.subgrad.clone()).collect();
        assert!(min_norm_point(&grads, 1e-10).unwrap().norm <= 1e-8);

        // Linear c^T x: singleton hull, step along -c.
        let c = Vector::from_slice(&[3.0, 4.0]);
        let cc = c.clone();
        let mut lin = ClosureFunction::new(2, 5.0, move |x: &Vector| Ok(FirstOrderReply::smooth(cc.dot(x), cc.clone())));
        let desc = goldstein_descent(0.1, 4, StepSchedule::constant(0.1), 0.5);
        let t = play(&desc, &mut lin, 6, 2, &mut RngStream::from_seed(3)).unwrap();
        assert_eq!(t.entries()[5].query, c.scaled(-0.1));

        // ||x|| far from 0 with a small ball: unit gradients, step toward 0.
        let mut norm = ClosureFunction::new(2, 1.0, |x: &Vector| Ok(FirstOrderReply::smooth(x.norm(), x.scaled(1.0 / x.norm()))));
        let start = Vector::from_slice(&[10.0, 0.0]);
        let desc = goldstein_descent(1e-3, 8, StepSchedule::constant(1.0), 0.5).with_initial_point(start);
        let t = play(&desc, &mut norm, 10, 2, &mut RngStream::from_seed(5)).unwrap();
        let next = &t.entries()[9].query;
        assert!((next[0] - 9.0).abs() < 1e-6 && next[1].abs() < 2e-4);
    }

    #[test]
    fn class_tags_are_enforced() {
        let bad = smoothed_gradient_method(0.1, 2, default_nonsmooth_schedule()).with_class(AlgorithmClass::LinearSpan);
        assert!(bad.validate().is_err());
        let shifted = subgradient_method(default_span_schedule()).with_initial_point(Vector::from_slice(&[1.0]));
        assert!(shifted.validate().is_err());
        assert!(subgradient_method(StepSchedule::constant(-1.0)).validate().is_err());
    }
}
