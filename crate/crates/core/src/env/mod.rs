//! Environments the master plays against.
//!
//! Everything the master sees goes through [`Environment`]: the adversary
//! fixes a hidden loss vector for all experts, then the master asks for the
//! loss of exactly one of them. The [`LossLedger`] inside each environment
//! keeps the hidden vectors, the per-expert bookkeeping used for regret, and
//! a log of every reveal so bandit feedback can be audited after a run.

mod games;
mod oblivious;
mod strategies;

pub use games::{
    make_chicken, make_chicken_with, make_heaven_hell, make_heaven_hell_variant, make_pd_tit_for_tat, Action,
    BasicStep, Game, HeavenHell, LossMatrix, MatrixGame, OpponentModel, Outcome,
};
pub use oblivious::{make_oblivious, LossSource, ObliviousEnv};
pub use strategies::{constant_strategy, lookup_strategy, registry, Alternate, Constant, Strategy, TitForTat};

use serde::{Deserialize, Serialize};

use crate::error::{FoeError, Result};
use crate::numeric::CompensatedSum;
use crate::pool::ExpertId;

/// A master-scale adversary.
pub trait Environment {
    fn num_experts(&self) -> usize;

    /// Fixes the losses of every expert for master step `t`. Called once per
    /// step, before the master commits to an expert.
    fn assign_losses(&mut self, t: u64) -> Result<()>;

    /// The declared bound `B_t` on every loss of step `t`.
    fn loss_bound(&self, t: u64) -> Result<f64>;

    /// Plays `expert` for the current step and returns its loss. At most one
    /// reveal is allowed per step.
    fn reveal(&mut self, expert: ExpertId) -> Result<f64>;

    fn ledger(&self) -> &LossLedger;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub t: u64,
    pub expert: ExpertId,
}

/// Hidden loss vectors, per-expert cumulative true losses and the reveal log.
#[derive(Debug, Clone, PartialEq)]
pub struct LossLedger {
    t: u64,
    hidden: Vec<f64>,
    revealed: bool,
    log: Vec<Reveal>,
    cumulative: Vec<CompensatedSum>,
}

impl LossLedger {
    pub fn new(n: usize) -> Self {
        LossLedger { t: 0, hidden: vec![0.0; n], revealed: true, log: Vec::new(), cumulative: vec![CompensatedSum::new(); n] }
    }

    /// Opens step `t` with the given hidden losses.
    pub fn begin(&mut self, t: u64, losses: Vec<f64>) -> Result<()> {
        if losses.len() != self.hidden.len() {
            return Err(FoeError::Contract(format!(
                "{} losses assigned for {} experts",
                losses.len(),
                self.hidden.len()
            )));
        }
        if t <= self.t {
            return Err(FoeError::Contract(format!("losses for t = {t} assigned after t = {}", self.t)));
        }
        if let Some(l) = losses.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(FoeError::Contract(format!("loss {l} at t = {t} is not a nonnegative number")));
        }
        for (acc, l) in self.cumulative.iter_mut().zip(&losses) {
            acc.add(*l);
        }
        self.t = t;
        self.hidden = losses;
        self.revealed = false;
        Ok(())
    }

    pub fn reveal(&mut self, expert: ExpertId) -> Result<f64> {
        if expert >= self.hidden.len() {
            return Err(FoeError::UnknownExpert(expert));
        }
        if self.revealed {
            return Err(FoeError::BanditViolation(format!(
                "second reveal (expert {expert}) at t = {}",
                self.t
            )));
        }
        self.revealed = true;
        self.log.push(Reveal { t: self.t, expert });
        Ok(self.hidden[expert])
    }

    /// Current step.
    pub fn step(&self) -> u64 {
        self.t
    }

    /// The full hidden loss vector of the current step. Reading it is an
    /// analysis privilege: the master itself only learns losses through
    /// [`LossLedger::reveal`].
    pub fn oracle_losses(&self) -> &[f64] {
        &self.hidden
    }

    /// `l^i_{1:t}` for every expert, through the last assigned step.
    pub fn cumulative(&self) -> Vec<f64> {
        self.cumulative.iter().map(CompensatedSum::value).collect()
    }

    pub fn reveal_log(&self) -> &[Reveal] {
        &self.log
    }

    /// Checks that steps `1..=horizon` were each revealed exactly once.
    pub fn audit(&self, horizon: u64) -> Result<()> {
        if self.log.len() as u64 != horizon {
            return Err(FoeError::BanditViolation(format!(
                "{} reveals logged for {horizon} steps",
                self.log.len()
            )));
        }
        match self.log.iter().zip(1..).find(|(r, t)| r.t != *t) {
            Some((r, t)) => Err(FoeError::BanditViolation(format!("reveal at t = {} where t = {t} expected", r.t))),
            None => Ok(()),
        }
    }
}
