//! Follow-or-Explore: a bandit experts master algorithm built on
//! follow-the-perturbed-leader, usable with countably many experts and
//! growing loss bounds, plus a wrapper that hands control to experts for
//! blocks of increasing length so the master can cope with reactive
//! opponents.
//!
//! Module map:
//! - [`schedules`]: exploration/learning rates, loss bounds, entering times.
//! - [`pool`]: the expert registry and its estimated-loss accumulators.
//! - [`selectors`]: FPL and the infeasible FPL used in analysis.
//! - [`master`]: one FoE step and full runs.
//! - [`reactive`]: the block wrapper for basic-scale games.
//! - [`env`]: adversaries, games and expert strategies.
//! - [`analysis`]: regret, bound evaluation and statistical validators.

pub mod analysis;
pub mod env;
pub mod error;
pub mod master;
pub mod numeric;
pub mod pool;
pub mod reactive;
pub mod rng;
pub mod schedules;
pub mod selectors;

pub use error::{FoeError, Result};
pub use master::{foe_step, run, StepRecord, Trajectory};
pub use pool::{Expert, ExpertId, PoolState};
pub use reactive::{run_blocks, tilde_foe_run, BasicTrajectory, Block, BlockLengths};
pub use schedules::{LossBoundRegime, Rational, ScheduleConfig};
