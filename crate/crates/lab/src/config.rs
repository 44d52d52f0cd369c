//! The experiment configuration document (a single UTF-8 JSON object).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use foe_core::env::{lookup_strategy, LossMatrix};
use foe_core::ScheduleConfig;

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Plain FoE: one master step per environment step.
    Foe,
    /// Block wrapper on a basic-scale game.
    TildeFoe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    ObliviousTable { table: Vec<Vec<f64>> },
    Bernoulli { means: Vec<f64> },
    Switching { n: usize },
    Zero { n: usize },
    PdTitForTat {
        #[serde(default = "pd_matrix")]
        matrix: LossMatrix,
    },
    Chicken {
        threshold: u64,
        #[serde(default = "chicken_matrix")]
        matrix: LossMatrix,
    },
    HeavenHell,
    HeavenHellVariant,
}

fn pd_matrix() -> LossMatrix {
    LossMatrix::PRISONERS_DILEMMA
}

fn chicken_matrix() -> LossMatrix {
    LossMatrix::CHICKEN
}

impl EnvironmentSpec {
    /// Basic-scale games are played by expert strategies; the rest are
    /// master-scale loss sources over abstract experts.
    pub fn is_basic(&self) -> bool {
        matches!(
            self,
            EnvironmentSpec::PdTitForTat { .. }
                | EnvironmentSpec::Chicken { .. }
                | EnvironmentSpec::HeavenHell
                | EnvironmentSpec::HeavenHellVariant
        )
    }

    /// Number of experts a master-scale environment defines.
    pub fn width(&self) -> Option<usize> {
        match self {
            EnvironmentSpec::ObliviousTable { table } => table.first().map(Vec::len),
            EnvironmentSpec::Bernoulli { means } => Some(means.len()),
            EnvironmentSpec::Switching { n } | EnvironmentSpec::Zero { n } => Some(*n),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Uniform,
    /// `2^{-code length}` from the strategy registry.
    Program,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolSpec {
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Program { code_lengths: Vec<u32> },
    Strategies { names: Vec<String>, prior: PriorKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    /// Master steps in `foe` mode on master-scale environments, basic steps
    /// otherwise.
    pub horizon: u64,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub schedules: ScheduleConfig,
    pub environment: EnvironmentSpec,
    pub pool: PoolSpec,
}

impl ExperimentConfig {
    /// Parses either a bare configuration or a run manifest that embeds one.
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LabError::Config(format!("invalid JSON: {e}")))?;
        let inner = match value.get("config") {
            Some(cfg) if value.get("config_sha256").is_some() => cfg.clone(),
            _ => value,
        };
        let config: ExperimentConfig =
            serde_json::from_value(inner).map_err(|e| LabError::Config(format!("invalid configuration: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.name.trim().is_empty() {
            return bad("experiment name must not be empty".into());
        }
        if self.horizon < 1 {
            return bad("horizon must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        self.schedules.validate().map_err(|e| LabError::Config(e.to_string()))?;
        if self.mode == Mode::TildeFoe && !self.environment.is_basic() {
            return bad("mode tilde_foe requires a basic-scale environment".into());
        }
        match (&self.environment, &self.pool) {
            (env, PoolSpec::Strategies { names, .. }) if env.is_basic() => {
                if names.is_empty() {
                    return bad("strategy pool must not be empty".into());
                }
                if let Some(n) = names.iter().find(|n| lookup_strategy(n).is_none()) {
                    return bad(format!("unknown strategy {n:?}"));
                }
            }
            (env, _) if env.is_basic() => {
                return bad("basic-scale environments need a `strategies` pool".into());
            }
            (_, PoolSpec::Strategies { .. }) => {
                return bad("`strategies` pools need a basic-scale environment".into());
            }
            (env, pool) => {
                let width = env.width().unwrap_or(0);
                if width == 0 {
                    return bad("environment defines no experts".into());
                }
                let n = match pool {
                    PoolSpec::Uniform { n } => n.unwrap_or(width),
                    PoolSpec::Program { code_lengths } => code_lengths.len(),
                    PoolSpec::Strategies { .. } => unreachable!(),
                };
                if n != width {
                    return bad(format!("pool has {n} experts but the environment defines {width}"));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
