//! Executes an experiment over its seeds and writes the artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use foe_core::env::{
    lookup_strategy, make_chicken_with, make_heaven_hell, make_heaven_hell_variant, make_oblivious,
    make_pd_tit_for_tat, Action, Game, LossSource, Strategy,
};
use foe_core::{run, run_blocks, BasicTrajectory, BlockLengths, PoolState, Trajectory};

use crate::config::{EnvironmentSpec, ExperimentConfig, Mode, PoolSpec, PriorKind};
use crate::output;
use crate::LabError;

/// Environment variable that redirects the output directory.
pub const OUT_ENV: &str = "FOE_LAB_OUT";

/// Fraction of basic steps summarized as the long-run tail.
pub const TAIL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Master(Trajectory),
    Basic(BasicTrajectory),
}

impl RunOutput {
    pub fn master(&self) -> &Trajectory {
        match self {
            RunOutput::Master(t) => t,
            RunOutput::Basic(b) => &b.master,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub master_steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basic_steps: Option<u64>,
    pub total_loss: f64,
    pub best_expert_total: f64,
    pub regret_vs_best: f64,
    /// Mean basic loss over the final tenth of basic steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_mean_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_defect_frequency: Option<f64>,
}

impl SeedReport {
    fn of(seed: u64, out: &RunOutput) -> Self {
        let m = out.master();
        let basic = match out {
            RunOutput::Basic(b) => Some(b),
            RunOutput::Master(_) => None,
        };
        SeedReport {
            seed,
            master_steps: m.horizon(),
            basic_steps: basic.map(|b| b.basic_horizon()),
            total_loss: m.total_loss(),
            best_expert_total: m.best_expert_total(),
            regret_vs_best: m.total_loss() - m.best_expert_total(),
            tail_mean_loss: basic.map(|b| b.tail_mean_loss(TAIL_FRACTION)),
            tail_defect_frequency: basic.map(|b| b.tail_action_frequency(Action::Defect, TAIL_FRACTION)),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Explicit output directory; wins over the environment and the config.
    pub out_dir: Option<PathBuf>,
    /// Run and report without writing files.
    pub summary_only: bool,
    /// Worker threads; defaults to the number of CPUs, capped by the seed count.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub out_dir: Option<PathBuf>,
    pub seeds: Vec<SeedReport>,
    pub files: Vec<String>,
}

fn config_err(e: foe_core::FoeError) -> LabError {
    LabError::Config(e.to_string())
}

pub fn build_pool(config: &ExperimentConfig) -> Result<PoolState, LabError> {
    let alpha = config.schedules.entering_exponent;
    let width = config.environment.width().unwrap_or(0);
    let pool = match &config.pool {
        PoolSpec::Uniform { n } => PoolState::uniform(n.unwrap_or(width), alpha),
        PoolSpec::Program { code_lengths } => PoolState::program(code_lengths, alpha),
        PoolSpec::Strategies { names, prior } => {
            let labels = names.clone();
            match prior {
                PriorKind::Uniform => PoolState::uniform_labeled(labels, alpha),
                PriorKind::Program => {
                    let lengths = names
                        .iter()
                        .map(|n| lookup_strategy(n).map(|(_, len)| len))
                        .collect::<Option<Vec<u32>>>()
                        .ok_or_else(|| LabError::Config("unknown strategy in pool".into()))?;
                    PoolState::program_labeled(labels, &lengths, alpha)
                }
            }
        }
    };
    pool.map_err(config_err)
}

/// Strategies in pool id order.
fn pool_strategies(pool: &PoolState) -> Result<Vec<Box<dyn Strategy>>, LabError> {
    pool.experts()
        .iter()
        .map(|e| {
            lookup_strategy(&e.label)
                .map(|(s, _)| s)
                .ok_or_else(|| LabError::Config(format!("unknown strategy {:?}", e.label)))
        })
        .collect()
}

fn run_game<G: Game>(config: &ExperimentConfig, game: G, seed: u64) -> Result<RunOutput, LabError> {
    let mut pool = build_pool(config)?;
    let strategies = pool_strategies(&pool)?;
    let lengths = match config.mode {
        Mode::TildeFoe => BlockLengths::Schedule(config.schedules),
        Mode::Foe => BlockLengths::Unit,
    };
    let traj = run_blocks(&mut pool, game, strategies, lengths, config.horizon, &config.schedules, seed)?;
    Ok(RunOutput::Basic(traj))
}

/// Runs one seed of a validated configuration.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunOutput, LabError> {
    let source = match &config.environment {
        EnvironmentSpec::PdTitForTat { matrix } => {
            return run_game(config, make_pd_tit_for_tat(*matrix).map_err(config_err)?, seed);
        }
        EnvironmentSpec::Chicken { threshold, matrix } => {
            return run_game(config, make_chicken_with(*matrix, *threshold).map_err(config_err)?, seed);
        }
        EnvironmentSpec::HeavenHell => return run_game(config, make_heaven_hell(), seed),
        EnvironmentSpec::HeavenHellVariant => return run_game(config, make_heaven_hell_variant(), seed),
        EnvironmentSpec::ObliviousTable { table } => LossSource::Table(table.clone()),
        EnvironmentSpec::Bernoulli { means } => LossSource::bernoulli(means.clone(), seed),
        EnvironmentSpec::Switching { n } => LossSource::Switching { n: *n },
        EnvironmentSpec::Zero { n } => LossSource::Zero { n: *n },
    };
    let mut env = make_oblivious(source, config.schedules).map_err(config_err)?;
    let mut pool = build_pool(config)?;
    let traj = run(&mut pool, &mut env, config.horizon, &config.schedules, seed)?;
    Ok(RunOutput::Master(traj))
}

pub fn resolve_output_dir(config: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("foe-lab-out").join(&config.name))
}

fn write_seed(dir: &Path, seed: u64, out: &RunOutput) -> Result<Vec<String>, LabError> {
    let (jsonl, csv) = match out {
        RunOutput::Master(t) => (output::trajectory_jsonl(t), output::summary_csv(t)),
        RunOutput::Basic(b) => (output::basic_trajectory_jsonl(b), output::basic_summary_csv(b)),
    };
    let names = vec![format!("trajectory_seed{seed}.jsonl"), format!("summary_seed{seed}.csv")];
    output::write_atomic(&dir.join(&names[0]), jsonl.as_bytes())?;
    output::write_atomic(&dir.join(&names[1]), csv.as_bytes())?;
    Ok(names)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    config: ExperimentConfig,
    files: &'a [String],
    results: &'a [SeedReport],
}

/// Runs every seed of `config` (in parallel) and, unless asked not to,
/// writes per-seed trajectories and summaries, the aggregate table and a
/// manifest. Outputs depend only on the configuration.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport, LabError> {
    config.validate()?;
    let dir = if opts.summary_only { None } else { Some(resolve_output_dir(config, opts.out_dir.as_deref())) };
    if let Some(d) = &dir {
        fs::create_dir_all(d).map_err(|e| LabError::Io(format!("{}: {e}", d.display())))?;
    }
    let threads = opts
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, config.seeds.len());
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Io(format!("cannot start worker threads: {e}")))?;
    let results: Vec<(RunOutput, Vec<String>)> = workers.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let out = run_seed(config, seed)?;
                let files = match &dir {
                    Some(d) => write_seed(d, seed, &out)?,
                    None => Vec::new(),
                };
                Ok((out, files))
            })
            .collect::<Result<_, LabError>>()
    })?;

    let seeds: Vec<SeedReport> =
        config.seeds.iter().zip(&results).map(|(&s, (out, _))| SeedReport::of(s, out)).collect();
    let mut files: Vec<String> = results.iter().flat_map(|(_, f)| f.iter().cloned()).collect();
    if let Some(d) = &dir {
        let masters: Vec<&Trajectory> = results.iter().map(|(o, _)| o.master()).collect();
        output::write_atomic(&d.join("aggregate.csv"), output::aggregate_csv(&masters).as_bytes())?;
        files.push("aggregate.csv".into());
        files.push("manifest.json".into());
        let mut stored = config.clone();
        stored.output_dir = None;
        let manifest = Manifest {
            tool: "foe-lab",
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config.hash(),
            config: stored,
            files: &files,
            results: &seeds,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        output::write_atomic(&d.join("manifest.json"), text.as_bytes())?;
    }
    Ok(ExperimentReport { out_dir: dir, seeds, files })
}
