//! Certificates for the stationarity notions: a small subgradient,
//! a small element of the hull of subgradients near a point, and lower
//! bounds on subgradient norms and on the distance to stationary points.

mod minnorm;

use serde::{Deserialize, Serialize};

pub use minnorm::{min_norm_brute_oracle, min_norm_point, MinNormResult, WOLFE_TOL};

use crate::error::{Error, Result};
use crate::oracle_game::Oracle;
use crate::rng::RngStream;
use crate::vectorspace::{sample_ball, Vector};
use crate::zoo::{region_classify, ChannelInstance, Function, Region};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// The explicit constants behind the hardness results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    pub lipschitz_channel: f64,
    pub stationarity_threshold: f64,
    pub value_gap: f64,
    pub distance_bound: f64,
    pub lipschitz_spiral_ball: f64,
}

pub const CONSTANTS: ConstantsTable = ConstantsTable {
    lipschitz_channel: 7.0,
    stationarity_threshold: FRAC_1_SQRT_2 / 2.0,
    value_gap: 1.5,
    distance_bound: 1.0 / 7.0,
    lipschitz_spiral_ball: 2.0 * PI,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    EpsStationaryWitness,
    /// A single subgradient larger than `eps`: proves nothing.
    EpsNoWitness,
    DeltaEpsWitness,
    /// The sampled hull stays above `eps`: proves nothing.
    DeltaEpsNoWitness,
    NearDistanceLowerBound,
    SubdiffNormLowerBound,
}

impl CertificateKind {
    pub fn is_witness(self) -> bool {
        matches!(self, CertificateKind::EpsStationaryWitness | CertificateKind::DeltaEpsWitness)
    }
}

/// Points, their subgradients and the combination certifying stationarity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub points: Vec<Vector>,
    pub subgrads: Vec<Vector>,
    pub coefficients: Vec<f64>,
}

impl Witness {
    /// `sum_i c_i g_i`.
    pub fn recombine(&self) -> Vector {
        let mut v = Vector::zeros(self.subgrads[0].dim());
        for (g, c) in self.subgrads.iter().zip(&self.coefficients) {
            v.axpy(*c, g);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityCertificate {
    pub kind: CertificateKind,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub constants: ConstantsTable,
    /// Which conclusion a sampled certificate can support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sound_direction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Region>,
}

impl StationarityCertificate {
    fn new(kind: CertificateKind, value: f64) -> Self {
        StationarityCertificate {
            kind,
            value,
            witness: None,
            constants: CONSTANTS,
            sound_direction: None,
            region: None,
        }
    }
}

/// How points of the `delta`-ball are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `n` uniform draws from the ball.
    BallUniform(usize),
    /// Fixed offsets from the center.
    Stencil(Vec<Vector>),
}

/// One query: a witness when the returned subgradient has norm at most `eps`.
pub fn certify_eps<O: Oracle + ?Sized>(oracle: &mut O, x: &Vector, eps: f64) -> Result<StationarityCertificate> {
    let reply = oracle.query(x)?;
    let value = reply.subgrad.norm();
    if value <= eps {
        let mut c = StationarityCertificate::new(CertificateKind::EpsStationaryWitness, value);
        c.witness = Some(Witness {
            points: vec![x.clone()],
            subgrads: vec![reply.subgrad],
            coefficients: vec![1.0],
        });
        Ok(c)
    } else {
        let mut c = StationarityCertificate::new(CertificateKind::EpsNoWitness, value);
        c.sound_direction = Some("stationarity_only".into());
        Ok(c)
    }
}

/// Min-norm element of the hull of subgradients at sampled points of the
/// closed `delta`-ball around `x`. Only a small value is conclusive.
pub fn certify_delta_eps<O: Oracle + ?Sized>(
    oracle: &mut O,
    x: &Vector,
    delta: f64,
    eps: f64,
    sampling: &Sampling,
    rng: &mut RngStream,
) -> Result<StationarityCertificate> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    x.check_dim(oracle.dim())?;
    let offsets: Vec<Vector> = match sampling {
        Sampling::BallUniform(n) => {
            if *n == 0 {
                return Err(Error::InvalidParameter("need at least one sample".into()));
            }
            (0..*n).map(|_| sample_ball(x.dim(), delta, rng)).collect::<Result<_>>()?
        }
        Sampling::Stencil(s) => {
            if s.is_empty() {
                return Err(Error::InvalidParameter("empty stencil".into()));
            }
            s.clone()
        }
    };
    let mut points = Vec::with_capacity(offsets.len());
    let mut subgrads = Vec::with_capacity(offsets.len());
    for o in &offsets {
        o.check_dim(x.dim())?;
        let r = o.norm();
        if r > delta * (1.0 + 1e-12) {
            return Err(Error::OutsideBall { distance: r, radius: delta });
        }
        let p = x + o;
        subgrads.push(oracle.query(&p)?.subgrad);
        points.push(p);
    }
    let mn = min_norm_point(&subgrads, WOLFE_TOL)?;
    let kind = if mn.norm <= eps {
        CertificateKind::DeltaEpsWitness
    } else {
        CertificateKind::DeltaEpsNoWitness
    };
    let mut c = StationarityCertificate::new(kind, mn.norm);
    c.sound_direction = Some("stationarity_only".into());
    if kind.is_witness() {
        c.witness = Some(Witness {
            points,
            subgrads,
            coefficients: mn.coefficients,
        });
    }
    Ok(c)
}

/// Proven lower bound on the norm of every Clarke subgradient of the channel
/// function at `x`: 1 off the hinge boundary, `1/sqrt 2` on it, scaled by
/// `1/sqrt 2` under the affine composition. Not available where the clamp
/// is active or on its boundary.
pub fn subdiff_norm_lower_bound(instance: &ChannelInstance, x: &Vector) -> Result<StationarityCertificate> {
    let region = region_classify(instance, x)?;
    let base = match region {
        Region::Origin | Region::MinusW | Region::HingeInactive | Region::HingeActive => 1.0,
        Region::HingeBoundary => FRAC_1_SQRT_2,
        Region::ClampActive | Region::ClampBoundary => {
            return Err(Error::NotApplicable(format!(
                "no subgradient lower bound in region {}",
                region.as_str()
            )))
        }
    };
    let value = if instance.is_composed() { base * FRAC_1_SQRT_2 } else { base };
    let mut c = StationarityCertificate::new(CertificateKind::SubdiffNormLowerBound, value);
    c.region = Some(region);
    Ok(c)
}

/// `max(0, (h(x) - clamp) / 7)`: every point whose subgradients can be
/// small lies on the clamp plateau, and the function is 7-Lipschitz.
pub fn near_stationarity_distance_lb(instance: &ChannelInstance, x: &Vector) -> Result<StationarityCertificate> {
    let level = instance
        .clamp()
        .ok_or_else(|| Error::NotApplicable("distance bound needs a clamped instance".into()))?;
    let h = instance.eval(x)?.value;
    Ok(distance_lb_from_value(h, level))
}

/// The value-gap bound for a known value `h` and plateau level.
pub fn distance_lb_from_value(h: f64, level: f64) -> StationarityCertificate {
    let value = ((h - level) / CONSTANTS.lipschitz_channel).max(0.0);
    StationarityCertificate::new(CertificateKind::NearDistanceLowerBound, value)
}
