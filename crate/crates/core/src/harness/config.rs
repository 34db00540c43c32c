//! Experiment configuration: one JSON document, with dotted command line
//! flags (`--solver.kind steepest`) overriding individual fields.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::adversaries::{WMode, T_MAX_DEFAULT_W};
use crate::error::{Error, Result};
use crate::oracle_game::{AlgorithmClass, AlgorithmDescriptor};
use crate::solvers::{
    goldstein_descent, smoothed_gradient_method, steepest_descent_exact, subgradient_method, ScheduleKind,
    StepSchedule, DEFAULT_GOLDSTEIN_SAMPLES, DEFAULT_PROBE_STEP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    QuadLowerBound,
    RotationLowerBound,
    ChainStructure,
    Theorem1,
    Theorem1Randomized,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::QuadLowerBound => "quad_lower_bound",
            ExperimentName::RotationLowerBound => "rotation_lower_bound",
            ExperimentName::ChainStructure => "chain_structure",
            ExperimentName::Theorem1 => "theorem1",
            ExperimentName::Theorem1Randomized => "theorem1_randomized",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Subgrad,
    Steepest,
    Smoothed,
    Goldstein,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_rule: Option<ScheduleKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Overrides the class the solver is declared under.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<AlgorithmClass>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverKind::Subgrad,
            step_rule: None,
            step: None,
            probe_step: None,
            delta: None,
            samples: None,
            eps: None,
            class: None,
        }
    }
}

pub const DEFAULT_SMOOTHING_DELTA: f64 = 0.01;
pub const DEFAULT_SMOOTHING_SAMPLES: usize = 2;
pub const DEFAULT_GOLDSTEIN_EPS: f64 = 1e-3;

impl SolverConfig {
    /// The schedule, filling unspecified parts from `default`.
    pub fn schedule(&self, default: StepSchedule) -> StepSchedule {
        StepSchedule {
            kind: self.step_rule.unwrap_or(default.kind),
            scale: self.step.unwrap_or(default.scale),
        }
    }

    pub fn descriptor(&self, default: StepSchedule) -> Result<AlgorithmDescriptor> {
        let schedule = self.schedule(default);
        let delta = self.delta.unwrap_or(DEFAULT_SMOOTHING_DELTA);
        let desc = match self.kind {
            SolverKind::Subgrad => subgradient_method(schedule),
            SolverKind::Steepest => steepest_descent_exact(self.probe_step.unwrap_or(DEFAULT_PROBE_STEP)),
            SolverKind::Smoothed => {
                smoothed_gradient_method(delta, self.samples.unwrap_or(DEFAULT_SMOOTHING_SAMPLES), schedule)
            }
            SolverKind::Goldstein => goldstein_descent(
                delta,
                self.samples.unwrap_or(DEFAULT_GOLDSTEIN_SAMPLES),
                schedule,
                self.eps.unwrap_or(DEFAULT_GOLDSTEIN_EPS),
            ),
        };
        let desc = match self.class {
            Some(c) => desc.with_class(c),
            None => desc,
        };
        desc.validate()?;
        Ok(desc)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_mode: Option<WMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

pub const DEFAULT_TRIALS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    #[serde(rename = "T")]
    pub t: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub adversary: AdversaryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    /// Named tolerance overrides, e.g. `replay_rel_err`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName, t: usize, d: usize) -> Self {
        ExperimentConfig {
            experiment,
            t,
            d,
            seed: 0,
            solver: SolverConfig::default(),
            adversary: AdversaryConfig::default(),
            output_path: None,
            tolerances: BTreeMap::new(),
        }
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// The mode of `w`, by default orthogonal for non-randomized algorithms.
    pub fn w_mode(&self, class: AlgorithmClass) -> WMode {
        self.adversary.w_mode.unwrap_or(match class {
            AlgorithmClass::Randomized => WMode::RandomizedSphere,
            _ => WMode::DeterministicOrthogonal,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.t < 1 {
            return bad("T must be at least 1".into());
        }
        match self.experiment {
            ExperimentName::QuadLowerBound | ExperimentName::ChainStructure => {
                if self.t < 2 {
                    return bad("the chain quadratic needs T >= 2".into());
                }
                if self.d < self.t {
                    return bad(format!("need d >= T, got d = {}, T = {}", self.d, self.t));
                }
            }
            ExperimentName::RotationLowerBound | ExperimentName::Theorem1 | ExperimentName::Theorem1Randomized => {
                if self.t < 2 {
                    return bad("the chain quadratic needs T >= 2".into());
                }
                let needs_2t = self.experiment == ExperimentName::RotationLowerBound
                    || self.adversary.w_mode == Some(WMode::DeterministicOrthogonal)
                    || (self.experiment == ExperimentName::Theorem1 && self.adversary.w_mode.is_none());
                if needs_2t && self.d < 2 * self.t {
                    return bad(format!("need d >= 2T, got d = {}, T = {}", self.d, self.t));
                }
                if self.d < self.t {
                    return bad(format!("need d >= T, got d = {}, T = {}", self.d, self.t));
                }
                if self.experiment != ExperimentName::RotationLowerBound
                    && self.adversary.w_norm.is_none()
                    && self.t > T_MAX_DEFAULT_W
                {
                    return bad(format!("the default ||w|| underflows for T > {T_MAX_DEFAULT_W}"));
                }
            }
        }
        if let Some(0) = self.adversary.trials {
            return bad("trials must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Parses a base document (possibly empty) and applies `--a.b value`
    /// overrides. Values are read as JSON when they parse, else as strings.
    pub fn from_parts(base: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut doc: Value = match base {
            Some(text) => serde_json::from_str(text)?,
            None => Value::Object(Default::default()),
        };
        apply_overrides(&mut doc, overrides)?;
        Ok(serde_json::from_value(doc)?)
    }
}

/// Sets dotted paths in a JSON object from `--path value` or `--path=value`.
pub fn apply_overrides(doc: &mut Value, args: &[String]) -> Result<()> {
    let mut i = 0;
    while i < args.len() {
        let Some(flag) = args[i].strip_prefix("--") else {
            return Err(Error::InvalidParameter(format!("expected a --field flag, got `{}`", args[i])));
        };
        let (path, raw) = match flag.split_once('=') {
            Some((p, v)) => (p.to_string(), v.to_string()),
            None => {
                let v = args
                    .get(i + 1)
                    .ok_or_else(|| Error::InvalidParameter(format!("flag --{flag} needs a value")))?;
                i += 1;
                (flag.to_string(), v.clone())
            }
        };
        i += 1;
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        set_path(doc, &path, value)?;
    }
    Ok(())
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (n, key) in parts.iter().enumerate() {
        if key.is_empty() {
            return Err(Error::InvalidParameter(format!("bad flag path `{path}`")));
        }
        if !cur.is_object() {
            *cur = Value::Object(Default::default());
        }
        let map = cur.as_object_mut().expect("object");
        if n + 1 == parts.len() {
            map.insert((*key).to_string(), value);
            return Ok(());
        }
        cur = map.entry((*key).to_string()).or_insert(Value::Object(Default::default()));
    }
    Ok(())
}
