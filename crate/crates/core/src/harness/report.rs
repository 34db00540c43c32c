use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::oracle_game::Transcript;
use crate::stationarity::StationarityCertificate;

/// Variable naming the default output directory.
pub const OUT_ENV: &str = "NEARSTAT_OUT";
pub const DEFAULT_OUT_DIR: &str = "nearstat-out";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
}

impl Relation {
    pub fn holds(self, measured: f64, threshold: f64) -> bool {
        match self {
            Relation::Ge => measured >= threshold,
            Relation::Gt => measured > threshold,
            Relation::Le => measured <= threshold,
            Relation::Eq => measured == threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Eq => "==",
        }
    }
}

/// One checked claim, tied to a numbered acceptance criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: u32,
    pub claim: String,
    /// `None` when the measurement is not finite.
    pub measured: Option<f64>,
    pub relation: Relation,
    pub threshold: f64,
    /// Signed slack in the passing direction.
    pub margin: Option<f64>,
    pub pass: bool,
}

impl Verdict {
    pub fn check(criterion: u32, claim: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        let pass = relation.holds(measured, threshold);
        let margin = match relation {
            Relation::Ge | Relation::Gt => measured - threshold,
            Relation::Le => threshold - measured,
            Relation::Eq => -(measured - threshold).abs(),
        };
        Verdict {
            criterion,
            claim: claim.into(),
            measured: measured.is_finite().then_some(measured),
            relation,
            threshold,
            margin: margin.is_finite().then_some(margin),
            pass,
        }
    }

    pub fn line(&self) -> String {
        let m = self.measured.map_or("non-finite".to_string(), |m| format!("{m:.6e}"));
        format!(
            "[{}] criterion {}: {} ({} {} {:.6e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.criterion,
            self.claim,
            m,
            self.relation.symbol(),
            self.threshold
        )
    }
}

/// Facts about one iterate (or one trial).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub index: usize,
    pub distance: f64,
    pub value: f64,
    pub subgrad_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicate_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ExperimentConfig>,
    /// Name of the experiment or verification suite.
    pub name: String,
    pub records: Vec<IterateRecord>,
    pub certificates: Vec<StationarityCertificate>,
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trials: Vec<TrialRecord>,
    pub elapsed_seconds: f64,
}

/// Summary of one independent game of a repeated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub min_distance: f64,
    pub max_alignment: f64,
    pub min_f_tilde: f64,
    pub min_instance_value: f64,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Report {
            config: None,
            name: name.into(),
            records: Vec::new(),
            certificates: Vec::new(),
            verdicts: Vec::new(),
            trials: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Everything a run produces.
pub struct RunOutput {
    pub report: Report,
    /// Named transcripts, written as `<name>.jsonl`.
    pub transcripts: Vec<(String, Transcript)>,
    /// Other named files, e.g. a built instance as JSON.
    pub extra_files: Vec<(String, String)>,
}

impl RunOutput {
    /// Writes `report.json` and the transcripts under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, t) in &self.transcripts {
            let p = dir.join(format!("{name}.jsonl"));
            fs::write(&p, t.to_jsonl()?)?;
            written.push(p);
        }
        for (name, text) in &self.extra_files {
            let p = dir.join(name);
            fs::write(&p, text)?;
            written.push(p);
        }
        let p = dir.join("report.json");
        fs::write(&p, self.report.to_json()?)?;
        written.push(p);
        Ok(written)
    }
}
