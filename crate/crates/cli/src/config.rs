//! TOML config file schema and its conversion into domain types.
//!
//! Arm indices in config files are 1-based, matching every other
//! user-facing surface. An experiment file looks like:
//!
//! ```toml
//! horizon = 20000
//! runs = 20
//! base_seed = 1
//! # checkpoints = [10, 100, 1000, 20000]   # optional
//! # output_dir = "results"                 # optional, --out overrides
//!
//! [environment]
//! n_arms = 3
//! max_plays = 2
//! means = [0.4, 0.5, 0.7]
//! weights = [1.0, 1.0, 1.0]
//! min_fractions = [0.5, 0.6, 0.4]
//!
//! [environment.availability]
//! type = "independent"
//! p = [0.9, 0.8, 0.7]
//!
//! [environment.reward_model]
//! type = "bernoulli"
//!
//! [[policies]]
//! label = "lfg-eta100"
//! kind = "lfg"
//! eta = 100.0
//!
//! [[policies]]
//! kind = "llrs"
//! ```
//!
//! A bare environment file (just the fields of `[environment]` at top
//! level) is accepted wherever only an environment is needed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fairmab_core::env::{ArmSet, AvailabilityModel, EnvironmentConfig, RewardModel};

use crate::harness::{ExperimentSpec, PolicyKind, PolicySpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub horizon: usize,
    pub runs: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub environment: EnvironmentFile,
    pub policies: Vec<PolicyFile>,
}

fn default_base_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentFile {
    pub n_arms: usize,
    pub max_plays: usize,
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
    pub min_fractions: Vec<f64>,
    pub availability: AvailabilityFile,
    #[serde(default)]
    pub reward_model: RewardModelFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AvailabilityFile {
    Independent { p: Vec<f64> },
    Categorical { entries: Vec<CategoricalEntryFile> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoricalEntryFile {
    /// 1-based arm indices of the availability set.
    pub arms: Vec<usize>,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardModelFile {
    #[default]
    Bernoulli,
    Deterministic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    #[serde(default)]
    pub label: Option<String>,
    pub kind: PolicyKindFile,
    #[serde(default)]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKindFile {
    Lfg,
    Llrs,
    AonlyPlayback,
    EmptyAction,
}

impl EnvironmentFile {
    pub fn into_config(self) -> Result<EnvironmentConfig, ConfigError> {
        let availability = match self.availability {
            AvailabilityFile::Independent { p } => AvailabilityModel::IndependentBernoulli { p },
            AvailabilityFile::Categorical { entries } => {
                let mut converted = Vec::with_capacity(entries.len());
                for entry in entries {
                    let mut set = ArmSet::EMPTY;
                    for arm in entry.arms {
                        if arm < 1 || arm > self.n_arms {
                            return Err(ConfigError::Invalid(format!(
                                "arm index {} outside 1..={}",
                                arm, self.n_arms
                            )));
                        }
                        set.insert(arm - 1);
                    }
                    converted.push((set, entry.probability));
                }
                AvailabilityModel::Categorical { entries: converted }
            }
        };
        let config = EnvironmentConfig {
            n_arms: self.n_arms,
            max_plays: self.max_plays,
            means: self.means,
            weights: self.weights,
            min_fractions: self.min_fractions,
            availability,
            reward_model: match self.reward_model {
                RewardModelFile::Bernoulli => RewardModel::Bernoulli,
                RewardModelFile::Deterministic => RewardModel::Deterministic,
            },
        };
        config
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(config)
    }
}

impl PolicyFile {
    pub fn into_spec(self) -> Result<PolicySpec, ConfigError> {
        let kind = match self.kind {
            PolicyKindFile::Lfg => {
                let eta = self.eta.ok_or_else(|| {
                    ConfigError::Invalid("lfg policy requires an eta".to_string())
                })?;
                if !eta.is_finite() || eta <= 0.0 {
                    return Err(ConfigError::Invalid(format!(
                        "eta must be positive, got {}",
                        eta
                    )));
                }
                PolicyKind::Lfg { eta }
            }
            other => {
                if self.eta.is_some() {
                    return Err(ConfigError::Invalid(
                        "eta is only meaningful for lfg policies".to_string(),
                    ));
                }
                match other {
                    PolicyKindFile::Llrs => PolicyKind::Llrs,
                    PolicyKindFile::AonlyPlayback => PolicyKind::AOnlyPlayback,
                    PolicyKindFile::EmptyAction => PolicyKind::EmptyAction,
                    PolicyKindFile::Lfg => unreachable!(),
                }
            }
        };
        let label = match self.label {
            Some(l) => l,
            None => match kind {
                PolicyKind::Lfg { eta } => format!("lfg-eta{}", eta),
                PolicyKind::Llrs => "llrs".to_string(),
                PolicyKind::AOnlyPlayback => "aonly".to_string(),
                PolicyKind::EmptyAction => "empty".to_string(),
            },
        };
        Ok(PolicySpec { label, kind })
    }
}

impl ExperimentFile {
    pub fn into_spec(self) -> Result<ExperimentSpec, ConfigError> {
        let environment = self.environment.into_config()?;
        let policies = self
            .policies
            .into_iter()
            .map(PolicyFile::into_spec)
            .collect::<Result<Vec<_>, _>>()?;
        let checkpoints = self
            .checkpoints
            .unwrap_or_else(|| fairmab_core::metrics::default_checkpoints(self.horizon));
        let spec = ExperimentSpec {
            environment,
            policies,
            horizon: self.horizon,
            runs: self.runs,
            base_seed: self.base_seed,
            checkpoints,
            output_dir: self.output_dir,
        };
        spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }
}

/// Parses a full experiment file.
pub fn parse_experiment(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let file: ExperimentFile =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    file.into_spec()
}

/// Parses either a full experiment file (using its `[environment]` table)
/// or a bare environment file.
pub fn parse_environment(text: &str) -> Result<EnvironmentConfig, ConfigError> {
    if let Ok(file) = toml::from_str::<ExperimentFile>(text) {
        return file.environment.into_config();
    }
    let env: EnvironmentFile =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    env.into_config()
}
