use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryError, EveStrategy};
use crate::channel::{ChannelError, ChannelParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Eve(#[from] AdversaryError),
    #[error("sample_fraction must lie strictly between 0 and 1, got {0}")]
    SampleFraction(f64),
    #[error("abort_qber must lie in [0, 1], got {0}")]
    AbortQber(f64),
}

fn default_sample_fraction() -> f64 {
    0.5
}

fn default_eve() -> EveStrategy {
    EveStrategy::Passive
}

/// Simulation parameters. Read from JSON with these field names; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub rounds: u64,
    pub seed: u64,
    pub eta: f64,
    pub d: f64,
    #[serde(default = "default_eve")]
    pub eve: EveStrategy,
    #[serde(default = "default_sample_fraction")]
    pub sample_fraction: f64,
    /// Overrides the analytic threshold as the abort level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_qber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice_transcript_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob_transcript_path: Option<PathBuf>,
}

impl SimConfig {
    pub fn new(rounds: u64, seed: u64, eta: f64, d: f64, eve: EveStrategy) -> Self {
        SimConfig {
            rounds,
            seed,
            eta,
            d,
            eve,
            sample_fraction: default_sample_fraction(),
            abort_qber: None,
            report_path: None,
            alice_transcript_path: None,
            bob_transcript_path: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: SimConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rounds == 0 {
            return Err(ConfigError::NoRounds);
        }
        self.channel()?;
        self.eve.validate()?;
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(ConfigError::SampleFraction(self.sample_fraction));
        }
        if let Some(q) = self.abort_qber {
            if !(0.0..=1.0).contains(&q) {
                return Err(ConfigError::AbortQber(q));
            }
        }
        Ok(())
    }

    pub fn channel(&self) -> Result<ChannelParams, ChannelError> {
        ChannelParams::new(self.eta, self.d)
    }
}
