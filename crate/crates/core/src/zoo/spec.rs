//! JSON documents describing zoo instances, for persisting and replaying
//! hard instances exactly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ChannelInstance, Function, NormDistance, ShiftedQuadratic, Spiral, Warga};
use crate::adversaries::{chain_k, rotated_minimizer, ChainMetric, ChainParams, HardQuadratic, Metric, RotatedChainMetric};
use crate::error::{Error, Result};
use crate::vectorspace::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Spiral,
    SpiralExtended,
    Channel,
    NormDistance,
    Warga,
    ChainQuadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_frame: Option<Vec<Vector>>,
}

impl InstanceSpec {
    pub fn bare(kind: InstanceKind) -> Self {
        InstanceSpec {
            kind,
            delta: None,
            w: None,
            clamp: None,
            x_star: None,
            chain: None,
            rotation_frame: None,
        }
    }

    pub fn spiral(delta: f64, extended: bool) -> Self {
        let kind = if extended {
            InstanceKind::SpiralExtended
        } else {
            InstanceKind::Spiral
        };
        InstanceSpec {
            delta: Some(delta),
            ..Self::bare(kind)
        }
    }

    pub fn warga() -> Self {
        Self::bare(InstanceKind::Warga)
    }

    pub fn channel(c: &ChannelInstance) -> Self {
        let mut spec = InstanceSpec {
            w: Some(c.w().clone()),
            clamp: c.clamp(),
            x_star: c.x_star().cloned(),
            ..Self::bare(InstanceKind::Channel)
        };
        if let Some(m) = c.metric() {
            spec.chain = m.chain_params();
            spec.rotation_frame = m.rotation_frame().map(|f| f.to_vec());
        }
        spec
    }

    pub fn chain_quadratic(t: usize, d: usize) -> Self {
        InstanceSpec {
            chain: Some(ChainParams { t, d, k: chain_k() }),
            ..Self::bare(InstanceKind::ChainQuadratic)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn require<T: Clone>(field: &Option<T>, name: &str, kind: InstanceKind) -> Result<T> {
        field
            .clone()
            .ok_or_else(|| Error::InvalidParameter(format!("{kind:?} instance needs field `{name}`")))
    }

    /// The metric described by `chain` and `rotation_frame`, identity when
    /// `chain` is absent.
    pub fn metric(&self, dim: usize) -> Result<Metric> {
        let Some(params) = self.chain else {
            if self.rotation_frame.is_some() {
                return Err(Error::InvalidParameter("rotation_frame requires chain parameters".into()));
            }
            return Ok(Metric::Identity { dim });
        };
        if params.k != chain_k() {
            return Err(Error::InvalidParameter(format!(
                "chain k = {} differs from the canonical {}",
                params.k,
                chain_k()
            )));
        }
        if params.d != dim {
            return Err(Error::dims(params.d, dim));
        }
        let base = ChainMetric::new(params)?;
        Ok(match &self.rotation_frame {
            None => Metric::Chain(base),
            Some(frame) => Metric::Rotated(RotatedChainMetric::new(base, frame.clone())?),
        })
    }

    /// Builds the described function.
    pub fn build(&self) -> Result<Box<dyn Function>> {
        let kind = self.kind;
        Ok(match kind {
            InstanceKind::Spiral | InstanceKind::SpiralExtended => {
                let delta = Self::require(&self.delta, "delta", kind)?;
                Box::new(Spiral::new(delta, kind == InstanceKind::SpiralExtended)?)
            }
            InstanceKind::Warga => Box::new(Warga),
            InstanceKind::Channel => Box::new(self.build_channel()?),
            InstanceKind::NormDistance => {
                let x_star = Self::require(&self.x_star, "x_star", kind)?;
                let metric = self.metric(x_star.dim())?;
                Box::new(NormDistance::new(Arc::new(metric), x_star)?)
            }
            InstanceKind::ChainQuadratic => {
                let params = Self::require(&self.chain, "chain", kind)?;
                let hq = HardQuadratic::new(params.t, params.d)?;
                match (&self.rotation_frame, &self.x_star) {
                    (None, None) => Box::new(hq),
                    (None, Some(x)) if x == hq.x_star() => Box::new(hq),
                    (None, Some(_)) => {
                        return Err(Error::InvalidParameter(
                            "x_star of a natural chain quadratic must be the canonical minimizer".into(),
                        ))
                    }
                    (Some(_), x_star) => {
                        let metric = self.metric(params.d)?;
                        let x_star = match x_star {
                            Some(x) => x.clone(),
                            None => rotated_minimizer(&hq, metric.rotation_frame().unwrap_or(&[])),
                        };
                        Box::new(ShiftedQuadratic::new(Arc::new(metric), x_star)?)
                    }
                }
            }
        })
    }

    /// Builds a channel instance (the only kind with region structure).
    pub fn build_channel(&self) -> Result<ChannelInstance> {
        if self.kind != InstanceKind::Channel {
            return Err(Error::NotApplicable(format!("{:?} is not a channel instance", self.kind)));
        }
        let w = Self::require(&self.w, "w", self.kind)?;
        let affine = match &self.x_star {
            None if self.chain.is_some() => {
                return Err(Error::InvalidParameter("chain parameters without x_star".into()))
            }
            None => None,
            Some(x) => Some((Arc::new(self.metric(w.dim())?), x.clone())),
        };
        ChannelInstance::new(w, self.clamp, affine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let hq = HardQuadratic::new(4, 8).unwrap();
        let w = Vector::from_slice(&[1e-7, -3.3e-9, 0.1, 1.0 / 3.0, 0.0, 0.0, 2.0f64.sqrt(), -0.7]);
        let c = ChannelInstance::composed(w, Arc::new(hq.metric()), hq.x_star().clone()).unwrap();
        let spec = InstanceSpec::channel(&c);
        let back = InstanceSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(spec, back);
        let rebuilt = back.build_channel().unwrap();
        let x = Vector::from_slice(&[0.3, 0.1, -0.2, 0.05, 0.0, 0.4, 0.0, 0.01]);
        assert!(c.eval(&x).unwrap().bitwise_eq(&rebuilt.eval(&x).unwrap()));
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(InstanceSpec::from_json(r#"{"kind": "spiral", "delta": 1, "bogus": 2}"#).is_err());
        assert!(InstanceSpec::from_json(r#"{"kind": "nope"}"#).is_err());
        let spec = InstanceSpec::from_json(r#"{"kind": "spiral"}"#).unwrap();
        assert!(spec.build().is_err());
        let bad_k = r#"{"kind": "chain_quadratic", "chain": {"T": 3, "d": 6, "k": 2.0}}"#;
        let spec = InstanceSpec::from_json(bad_k).unwrap();
        assert!(spec.metric(6).is_err());
    }

    #[test]
    fn builds_every_kind() {
        for text in [
            r#"{"kind": "spiral", "delta": 1.0}"#,
            r#"{"kind": "spiral_extended", "delta": 0.5}"#,
            r#"{"kind": "warga"}"#,
            r#"{"kind": "channel", "w": [0.3, 0.0], "clamp": -1.0}"#,
            r#"{"kind": "norm_distance", "x_star": [0.0, 0.0]}"#,
        ] {
            let f = InstanceSpec::from_json(text).unwrap().build().unwrap();
            assert_eq!(f.dim(), 2);
        }
        let q = InstanceSpec::chain_quadratic(3, 6).build().unwrap();
        assert_eq!(q.dim(), 6);
        assert!(q.eval(&Vector::zeros(6)).unwrap().value > 0.0);
    }
}
