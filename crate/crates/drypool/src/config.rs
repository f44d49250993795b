//! Run configuration: a single TOML file naming the four CSV inputs, the
//! policy block, the drought-probability grid, and the simulation block.
//! The file round-trips through serialization unchanged.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::simulate::SimConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where the drought probability for rate-setting comes from: the
/// declaration history (|Γ|/n) or a fixed scalar. Never mixed implicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaSource {
    Declarations,
    Fixed(f64),
}

impl Serialize for OmegaSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            OmegaSource::Declarations => serializer.serialize_str("declarations"),
            OmegaSource::Fixed(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for OmegaSource {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(x) => Ok(OmegaSource::Fixed(x)),
            Raw::Text(s) if s == "declarations" => Ok(OmegaSource::Declarations),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "omega must be a number or \"declarations\", got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for OmegaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaSource::Declarations => write!(f, "declarations"),
            OmegaSource::Fixed(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsConfig {
    pub yields: PathBuf,
    pub areas: PathBuf,
    pub prices: PathBuf,
    pub declarations: PathBuf,
    /// Optional `year,total_instalments,total_area_ha` table; required when
    /// `policy.instalment` is not given directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instalments: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Instalment l in currency/ha/season; when absent it is derived as a
    /// trailing moving average from the instalments table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instalment: Option<f64>,
    /// Trailing window (years) for the moving-average instalment.
    #[serde(default = "default_window")]
    pub instalment_window: usize,
    /// Retained fraction p; the insured benefit level is 1−p.
    pub retained_fraction: f64,
    /// Government-share override; defaults to the solvency floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Risk-appetite multiplier for fund sizing.
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub omega: OmegaSource,
    /// Rate the equal-weight cluster (θ_j = 1/J) instead of area shares.
    #[serde(default)]
    pub equal_weights: bool,
    /// Drop crops with E[S_j] ≤ 0 and renormalize θ over the rest.
    #[serde(default)]
    pub drop_uninsurable: bool,
}

fn default_window() -> usize {
    10
}

fn default_eta() -> f64 {
    1.96
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridConfig {
    /// The grid points start, start+step, …, up to stop (inclusive within
    /// float tolerance).
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let omega = self.start + f64::from(k) * self.step;
            if omega > self.stop + 1e-9 {
                break;
            }
            out.push(omega.min(1.0));
            k += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: InputsConfig,
    pub policy: PolicyConfig,
    pub grid: GridConfig,
    pub sim: SimConfig,
    pub output: OutputConfig,
    /// Optional per-crop production input costs (currency/ha) drawn as
    /// reference lines next to revenue.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub input_costs: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        RunConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.grid.step > 0.0) {
            return bad(format!("grid.step must be > 0, got {}", self.grid.step));
        }
        if !(self.grid.start > 0.0 && self.grid.start <= self.grid.stop && self.grid.stop <= 1.0) {
            return bad(format!(
                "grid must satisfy 0 < start <= stop <= 1, got [{}, {}]",
                self.grid.start, self.grid.stop
            ));
        }
        if !(0.0..=1.0).contains(&self.policy.retained_fraction) {
            return bad(format!(
                "policy.retained_fraction must be in [0, 1], got {}",
                self.policy.retained_fraction
            ));
        }
        if let Some(nu) = self.policy.nu {
            if !(0.0..=1.0).contains(&nu) {
                return bad(format!("policy.nu must be in [0, 1], got {nu}"));
            }
        }
        if !(self.policy.eta >= 0.0) {
            return bad(format!("policy.eta must be >= 0, got {}", self.policy.eta));
        }
        if let OmegaSource::Fixed(x) = self.policy.omega {
            if !(x > 0.0 && x <= 1.0) {
                return bad(format!("policy.omega must be in (0, 1], got {x}"));
            }
        }
        match self.policy.instalment {
            Some(l) if !(l > 0.0) => {
                return bad(format!("policy.instalment must be > 0, got {l}"))
            }
            None if self.inputs.instalments.is_none() => {
                return bad(
                    "either policy.instalment or inputs.instalments must be given".to_string(),
                )
            }
            _ => {}
        }
        if self.policy.instalment_window == 0 {
            return bad("policy.instalment_window must be >= 1".to_string());
        }
        Ok(())
    }
}
