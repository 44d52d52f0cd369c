//! Built-in experiment presets.

use foe_core::env::LossMatrix;
use foe_core::ScheduleConfig;

use crate::config::{EnvironmentSpec, ExperimentConfig, Mode, PoolSpec, PriorKind};

const NAMES: &[&str] = &[
    "pd-titfortat",
    "pd-titfortat-flat",
    "chicken-primitive",
    "heaven-hell",
    "heaven-hell-variant",
    "iid-bandit-10",
    "adversarial-3",
];

pub fn scenario_names() -> &'static [&'static str] {
    NAMES
}

fn strategies(names: &[&str]) -> PoolSpec {
    PoolSpec::Strategies { names: names.iter().map(|s| s.to_string()).collect(), prior: PriorKind::Uniform }
}

fn ten_seeds() -> Vec<u64> {
    (1..=10).collect()
}

pub fn scenario(name: &str) -> Option<ExperimentConfig> {
    let reactive = ScheduleConfig::reactive();
    let cfg = match name {
        "pd-titfortat" => ExperimentConfig {
            name: name.into(),
            mode: Mode::TildeFoe,
            horizon: 200_000,
            seeds: ten_seeds(),
            output_dir: None,
            schedules: reactive,
            environment: EnvironmentSpec::PdTitForTat { matrix: LossMatrix::PRISONERS_DILEMMA },
            pool: strategies(&["always-c", "always-d"]),
        },
        "pd-titfortat-flat" => ExperimentConfig {
            name: name.into(),
            mode: Mode::Foe,
            horizon: 200_000,
            seeds: ten_seeds(),
            output_dir: None,
            schedules: ScheduleConfig::default(),
            environment: EnvironmentSpec::PdTitForTat { matrix: LossMatrix::PRISONERS_DILEMMA },
            pool: strategies(&["always-c", "always-d"]),
        },
        "chicken-primitive" => ExperimentConfig {
            name: name.into(),
            mode: Mode::TildeFoe,
            horizon: 200_000,
            seeds: ten_seeds(),
            output_dir: None,
            schedules: reactive,
            environment: EnvironmentSpec::Chicken { threshold: 3, matrix: LossMatrix::CHICKEN },
            pool: strategies(&["always-c", "always-d"]),
        },
        "heaven-hell" | "heaven-hell-variant" => ExperimentConfig {
            name: name.into(),
            mode: Mode::TildeFoe,
            horizon: 50_000,
            seeds: ten_seeds(),
            output_dir: None,
            schedules: reactive,
            environment: if name == "heaven-hell" {
                EnvironmentSpec::HeavenHell
            } else {
                EnvironmentSpec::HeavenHellVariant
            },
            pool: strategies(&["pray", "curse"]),
        },
        "iid-bandit-10" => ExperimentConfig {
            name: name.into(),
            mode: Mode::Foe,
            horizon: 100_000,
            seeds: ten_seeds(),
            output_dir: None,
            schedules: ScheduleConfig::default(),
            environment: EnvironmentSpec::Bernoulli {
                means: vec![0.2, 0.3, 0.4, 0.45, 0.5, 0.55, 0.6, 0.7, 0.8, 0.9],
            },
            pool: PoolSpec::Uniform { n: None },
        },
        "adversarial-3" => ExperimentConfig {
            name: name.into(),
            mode: Mode::Foe,
            horizon: 10_000,
            seeds: (1..=20).collect(),
            output_dir: None,
            schedules: ScheduleConfig::default(),
            environment: EnvironmentSpec::Switching { n: 3 },
            pool: PoolSpec::Uniform { n: None },
        },
        _ => return None,
    };
    Some(cfg)
}
