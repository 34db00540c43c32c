//! Chooses the direction `w` of the channel so that a given algorithm, run
//! on `h_w`, sees exactly what it would see on the square-root quadratic.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chain::{HardQuadratic, Metric};
use super::rotation::RotationOracle;
use crate::error::{Error, Result};
use crate::oracle_game::{play, validate_span, AlgorithmClass, AlgorithmDescriptor, Oracle, Transcript, SPAN_TOL};
use crate::rng::RngStream;
use crate::vectorspace::{extend_orthonormal, sample_sphere, OrthonormalFrame, Vector};
use crate::zoo::{sqrt_oracle_transform, sqrt_quadratic, ChannelInstance, FirstOrderReply, SqrtQuadratic};

/// Smallest admissible `||w||`.
pub const W_NORM_MIN: f64 = 1e-11;
/// Largest budget for which the default `||w||` clears [`W_NORM_MIN`].
pub const T_MAX_DEFAULT_W: usize = 19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WMode {
    DeterministicOrthogonal,
    RandomizedSphere,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelAdversaryConfig {
    pub mode: WMode,
    /// `||w||`; `None` means `exp(-T) / 300`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_norm: Option<f64>,
}

impl ChannelAdversaryConfig {
    pub fn new(mode: WMode) -> Self {
        ChannelAdversaryConfig { mode, w_norm: None }
    }

    pub fn w_norm(&self, t: usize) -> Result<f64> {
        let n = self.w_norm.unwrap_or_else(|| (-(t as f64)).exp() / 300.0);
        if !(n.is_finite() && n >= W_NORM_MIN) {
            return Err(Error::InvalidParameter(format!(
                "||w|| = {n:e} is below the guard {W_NORM_MIN:e} (T <= {T_MAX_DEFAULT_W} with the default norm)"
            )));
        }
        Ok(n)
    }
}

/// Wraps an oracle of a nonnegative function into one of its square root.
pub struct SqrtOracle<O> {
    pub inner: O,
}

impl<O: Oracle> Oracle for SqrtOracle<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn query(&mut self, x: &Vector) -> Result<FirstOrderReply> {
        sqrt_oracle_transform(&self.inner.query(x)?)
    }

    fn is_pure(&self) -> bool {
        self.inner.is_pure()
    }
}

/// Per-iterate facts about the construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelDiagnostics {
    pub mode: WMode,
    /// "natural" or "rotated" coordinates of the underlying quadratic.
    pub coordinates: String,
    pub w_norm: f64,
    pub iterates: Vec<Vector>,
    /// `||x_t - x*||`.
    pub distances: Vec<f64>,
    /// `wbar^T overline{M^{1/2}(x_t - x*)}`.
    pub alignments: Vec<f64>,
    /// `1/(2 sqrt 2) - exp(-T) / (100 ||x_t - x*||)`.
    pub predicate_bounds: Vec<f64>,
    pub predicate_holds: Vec<bool>,
    pub max_alignment: f64,
    /// Largest deviation between iterates of the lazy and the materialized
    /// rotated function (rotated coordinates only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub materialization_gap: Option<f64>,
}

/// The built instance with everything needed to replay the game.
pub struct ChannelBuild {
    pub instance: ChannelInstance,
    pub f_tilde: SqrtQuadratic,
    pub metric: Arc<Metric>,
    pub x_star: Vector,
    /// The algorithm's transcript on `f_tilde`.
    pub f_tilde_transcript: Transcript,
    /// Algorithm stream at the start of the game, for replays.
    pub algorithm_rng: RngStream,
    pub diagnostics: ChannelDiagnostics,
}

impl ChannelBuild {
    /// Plays the algorithm on `h_w` with the same coins.
    pub fn replay_on_instance(&self, algorithm: &AlgorithmDescriptor) -> Result<Transcript> {
        let mut inst = self.instance.clone();
        let mut rng = self.algorithm_rng.clone();
        play(algorithm, &mut inst, self.f_tilde_transcript.budget(), inst_dim(&self.instance), &mut rng)
    }
}

fn inst_dim(c: &ChannelInstance) -> usize {
    c.w().dim()
}

/// Runs `algorithm` on the square-root quadratic and picks `w` so that `h_w`
/// agrees with it around every iterate.
///
/// Linear-span and randomized algorithms face the natural-coordinate chain;
/// deterministic ones face the rotation oracle, whose frame is then fixed
/// and the game replayed on the fixed function.
pub fn build_channel_instance(
    cfg: &ChannelAdversaryConfig,
    algorithm: &AlgorithmDescriptor,
    t: usize,
    d: usize,
    algorithm_rng: &RngStream,
    adversary_rng: &mut RngStream,
) -> Result<ChannelBuild> {
    algorithm.validate()?;
    let w_norm = cfg.w_norm(t)?;
    if cfg.mode == WMode::DeterministicOrthogonal {
        if algorithm.class == AlgorithmClass::Randomized {
            return Err(Error::InvalidParameter(
                "an orthogonal w needs the iterates in advance; use the randomized mode".into(),
            ));
        }
        if d < 2 * t {
            return Err(Error::InvalidParameter(format!("deterministic mode needs d >= 2T, got d = {d}, T = {t}")));
        }
    }
    let hq = HardQuadratic::new(t, d)?;

    let (metric, x_star, transcript, coordinates, gap) = if algorithm.class == AlgorithmClass::Deterministic {
        let mut lazy = SqrtOracle {
            inner: RotationOracle::new(hq.clone())?,
        };
        let lazy_run = play(algorithm, &mut lazy, t, d, &mut algorithm_rng.clone())?;
        let fixed = lazy.inner.materialize()?;
        let metric = Arc::new(fixed.metric()?);
        let x_star = fixed.x_star().clone();
        let mut f = sqrt_quadratic(metric.clone(), x_star.clone())?;
        let replay = play(algorithm, &mut f, t, d, &mut algorithm_rng.clone())?;
        let again = play(algorithm, &mut f, t, d, &mut algorithm_rng.clone())?;
        if let Some(i) = (0..replay.len()).find(|&i| replay.entries()[i] != again.entries()[i]) {
            return Err(Error::ClassViolation { index: i + 1 });
        }
        let gap = lazy_run
            .queries()
            .zip(replay.queries())
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max);
        (metric, x_star, replay, "rotated", Some(gap))
    } else {
        let metric = Arc::new(hq.metric());
        let x_star = hq.x_star().clone();
        let mut f = sqrt_quadratic(metric.clone(), x_star.clone())?;
        let run = play(algorithm, &mut f, t, d, &mut algorithm_rng.clone())?;
        if algorithm.class == AlgorithmClass::LinearSpan {
            let check = validate_span(&run, SPAN_TOL);
            if let Some(i) = check.first_violation {
                return Err(Error::ClassViolation { index: i });
            }
        }
        (metric, x_star, run, "natural", None)
    };

    let bound = (-(t as f64)).exp();
    let iterates: Vec<Vector> = transcript.queries().cloned().collect();
    let distances: Vec<f64> = iterates.iter().map(|x| x.distance(&x_star)).collect();
    for (i, &dist) in distances.iter().enumerate() {
        if dist < bound {
            return Err(Error::LowerBoundViolated {
                index: i + 1,
                distance: dist,
                bound,
            });
        }
    }
    let mapped: Vec<Vector> = iterates
        .iter()
        .map(|x| metric.apply_sqrt(&(x - &x_star)))
        .collect::<Result<_>>()?;

    let w = match cfg.mode {
        WMode::DeterministicOrthogonal => {
            let frame = OrthonormalFrame::new(d);
            extend_orthonormal(&frame, &mapped)?.scaled(w_norm)
        }
        WMode::RandomizedSphere => sample_sphere(d, w_norm, adversary_rng)?,
    };
    let instance = ChannelInstance::composed(w, metric.clone(), x_star.clone())?;
    let w_bar = instance.w_bar().clone();

    let alignments: Vec<f64> = mapped.iter().map(|y| w_bar.dot(y) / y.norm()).collect();
    let threshold = std::f64::consts::FRAC_1_SQRT_2 / 2.0;
    let predicate_bounds: Vec<f64> = distances.iter().map(|dist| threshold - bound / (100.0 * dist)).collect();
    let predicate_holds = alignments.iter().zip(&predicate_bounds).map(|(a, b)| a <= b).collect();
    let max_alignment = alignments.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok(ChannelBuild {
        f_tilde: sqrt_quadratic(metric.clone(), x_star.clone())?,
        instance,
        metric,
        x_star,
        f_tilde_transcript: transcript,
        algorithm_rng: algorithm_rng.clone(),
        diagnostics: ChannelDiagnostics {
            mode: cfg.mode,
            coordinates: coordinates.into(),
            w_norm,
            iterates,
            distances,
            alignments,
            predicate_bounds,
            predicate_holds,
            max_alignment,
            materialization_gap: gap,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{default_nonsmooth_schedule, smoothed_gradient_method, subgradient_method};

    #[test]
    fn deterministic_w_is_orthogonal_and_replay_is_identical() {
        let desc = subgradient_method(default_nonsmooth_schedule());
        let cfg = ChannelAdversaryConfig::new(WMode::DeterministicOrthogonal);
        let b = build_channel_instance(&cfg, &desc, 6, 12, &RngStream::from_seed(0), &mut RngStream::from_seed(1)).unwrap();
        assert!(b.diagnostics.alignments.iter().all(|a| a.abs() <= 1e-12));
        assert!(b.diagnostics.predicate_holds.iter().all(|&h| h));
        let replay = b.replay_on_instance(&desc).unwrap();
        for (a, e) in b.f_tilde_transcript.entries().iter().zip(replay.entries()) {
            assert!(a.reply.bitwise_eq(&e.reply));
            assert_eq!(a.query, e.query);
        }
        assert!((b.instance.w().norm() - (-6f64).exp() / 300.0).abs() < 1e-20);
    }

    #[test]
    fn rotated_coordinates_for_deterministic_class() {
        let desc = subgradient_method(default_nonsmooth_schedule()).with_class(AlgorithmClass::Deterministic);
        let cfg = ChannelAdversaryConfig::new(WMode::DeterministicOrthogonal);
        let b = build_channel_instance(&cfg, &desc, 5, 10, &RngStream::from_seed(0), &mut RngStream::from_seed(1)).unwrap();
        assert_eq!(b.diagnostics.coordinates, "rotated");
        assert!(b.diagnostics.materialization_gap.unwrap() <= 1e-9);
        let replay = b.replay_on_instance(&desc).unwrap();
        assert_eq!(replay, b.f_tilde_transcript);
    }

    #[test]
    fn preconditions() {
        let desc = subgradient_method(default_nonsmooth_schedule());
        let det = ChannelAdversaryConfig::new(WMode::DeterministicOrthogonal);
        let r = build_channel_instance(&det, &desc, 6, 11, &RngStream::from_seed(0), &mut RngStream::from_seed(1));
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
        let r = build_channel_instance(&det, &desc, 20, 40, &RngStream::from_seed(0), &mut RngStream::from_seed(1));
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
        let smoothed = smoothed_gradient_method(0.01, 2, default_nonsmooth_schedule());
        let r = build_channel_instance(&det, &smoothed, 4, 8, &RngStream::from_seed(0), &mut RngStream::from_seed(1));
        assert!(r.is_err());
    }

    #[test]
    fn randomized_mode_alignment_is_small() {
        let desc = smoothed_gradient_method(0.01, 2, default_nonsmooth_schedule());
        let cfg = ChannelAdversaryConfig::new(WMode::RandomizedSphere);
        let b = build_channel_instance(&cfg, &desc, 10, 200, &RngStream::from_seed(3), &mut RngStream::from_seed(4)).unwrap();
        assert!(b.diagnostics.max_alignment < 1.0 / 3.0);
        assert_eq!(b.diagnostics.alignments.len(), 10);
    }
}
