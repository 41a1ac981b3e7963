use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::constitutive::PDeltaParams;
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::solver::{ContinuationSchedule, ExactField, NamedSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "check-constitutive")]
    CheckConstitutive,
    #[serde(rename = "solve")]
    Solve,
    #[serde(rename = "converge")]
    Converge,
    #[serde(rename = "regularity")]
    Regularity,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CheckConstitutive => "check-constitutive",
            Self::Solve => "solve",
            Self::Converge => "converge",
            Self::Regularity => "regularity",
        }
    }
}

/// Body force: a named field, or the manufactured force of a named exact
/// solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<String>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self { field: Some("constant".into()), manufactured: None, amplitude: 1.0 }
    }
}

/// A resolved source specification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceKind {
    Named(NamedSource),
    Manufactured(ExactField),
}

impl SourceSpec {
    pub fn resolve(&self) -> Result<SourceKind> {
        if !self.amplitude.is_finite() {
            return Err(Error::Config(format!("source.amplitude = {} must be finite", self.amplitude)));
        }
        match (&self.field, &self.manufactured) {
            (Some(f), None) => Ok(SourceKind::Named(NamedSource::by_name(f, self.amplitude)?)),
            (None, Some(m)) => Ok(SourceKind::Manufactured(ExactField::by_name(m, self.amplitude)?)),
            _ => Err(Error::Config("source: give exactly one of \"field\" or \"manufactured\"".into())),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_levels() -> Vec<usize> {
    vec![2, 3, 4]
}
fn default_seed() -> u64 {
    42
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    100
}
fn default_samples() -> usize {
    10_000
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment, read from a JSON document with a strict schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub domain: DomainSpec,
    pub p: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default)]
    pub schedule: ContinuationSchedule,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Random samples of the constitutive suite.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    /// Checks every field, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.p > 1.0 && self.p <= 2.0) {
            return bad(format!("p = {}: p out of (1,2]", self.p));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad(format!("delta = {} must be finite and non-negative", self.delta));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu = {} must be positive", self.mu));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.levels.is_empty() || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!("levels = {:?} must be non-empty and strictly increasing", self.levels));
        }
        if let Some(l) = self.levels.iter().find(|&&l| l > 10) {
            return bad(format!("levels: level {l} exceeds 10"));
        }
        self.domain.validate().map_err(|e| Error::Config(format!("domain: {e}")))?;
        self.schedule.validate().map_err(|e| Error::Config(format!("schedule: {e}")))?;
        if self.delta == 0.0 && self.schedule.kappa.is_empty() {
            return bad("schedule.kappa must be non-empty when delta = 0".into());
        }
        if let SourceKind::Manufactured(exact) = self.source.resolve()? {
            if !exact.fits(&self.domain) {
                return bad(format!(
                    "source.manufactured: '{}' does not vanish on the boundary of {:?}",
                    self.source.manufactured.as_deref().unwrap_or_default(),
                    self.domain
                ));
            }
        }
        if self.kind == ExperimentKind::Converge && self.source.manufactured.is_none() {
            return bad("source: converge needs a manufactured solution".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PDeltaParams> {
        PDeltaParams::new(self.p, self.delta, self.mu)
    }

    /// SHA-256 of the canonical JSON form, leaving out the output
    /// directory so that reruns elsewhere produce identical files.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        value.as_object_mut().expect("struct").remove("output");
        let canonical = serde_json::to_vec(&value).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates a JSON config document.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("{e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a JSON config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}
