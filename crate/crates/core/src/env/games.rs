//! Basic-scale repeated games: 2x2 matrix games against a scripted opponent,
//! and the heaven-hell task.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FoeError, Result};
use crate::pool::ExpertId;

/// A binary move. In heaven-hell, `Cooperate` is "pray" (0) and `Defect`
/// is "curse" (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "C")]
    Cooperate,
    #[serde(rename = "D")]
    Defect,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Cooperate => "C",
            Action::Defect => "D",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub opponent: Option<Action>,
    pub loss: f64,
}

/// One basic time step of the actual interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicStep {
    pub t_basic: u64,
    pub master_t: u64,
    pub expert: ExpertId,
    pub ours: Action,
    pub opponent: Option<Action>,
    pub loss: f64,
}

/// A basic-scale environment. `play` advances the game by one step. Games
/// are deterministic state machines, so a clone can be used to look ahead.
pub trait Game: Clone {
    fn play(&mut self, ours: Action) -> Result<Outcome>;

    /// Index of the next basic step, starting at 1.
    fn basic_time(&self) -> u64;
}

/// Learner losses for a 2x2 game, keyed (learner move, opponent move).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossMatrix {
    pub cc: f64,
    pub cd: f64,
    pub dc: f64,
    pub dd: f64,
}

impl LossMatrix {
    /// Prisoner's dilemma default: mutual cooperation 0.2, sucker 1.0,
    /// temptation 0.0, mutual defection 0.8.
    pub const PRISONERS_DILEMMA: LossMatrix = LossMatrix { cc: 0.2, cd: 1.0, dc: 0.0, dd: 0.8 };

    /// Chicken: crash 1, dominant defection 0, conceding 0.8, sharing 0.5.
    pub const CHICKEN: LossMatrix = LossMatrix { cc: 0.5, cd: 0.8, dc: 0.0, dd: 1.0 };

    pub fn loss(&self, ours: Action, theirs: Action) -> f64 {
        use Action::*;
        match (ours, theirs) {
            (Cooperate, Cooperate) => self.cc,
            (Cooperate, Defect) => self.cd,
            (Defect, Cooperate) => self.dc,
            (Defect, Defect) => self.dd,
        }
    }

    pub fn validate_unit(&self) -> Result<()> {
        for x in [self.cc, self.cd, self.dc, self.dd] {
            if !(0.0..=1.0).contains(&x) {
                return Err(FoeError::InvalidParameter(format!("matrix entry {x} not in [0,1]")));
            }
        }
        Ok(())
    }

    /// Defection dominates and mutual cooperation beats mutual defection.
    pub fn validate_prisoners_dilemma(&self) -> Result<()> {
        self.validate_unit()?;
        if !(self.dc < self.cc && self.dd < self.cd && self.cc < self.dd) {
            return Err(FoeError::InvalidParameter(format!(
                "not a prisoner's dilemma: need dc < cc < dd < cd, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpponentModel {
    /// Cooperates first, then repeats the learner's previous move.
    TitForTat { last_learner: Option<Action> },
    /// Defects until the learner has defected `threshold` times in a row,
    /// then cooperates while the learner keeps defecting. Any learner
    /// cooperation resets it.
    Primitive { threshold: u64, run: u64 },
}

impl OpponentModel {
    fn next(&self) -> Action {
        match *self {
            OpponentModel::TitForTat { last_learner } => last_learner.unwrap_or(Action::Cooperate),
            OpponentModel::Primitive { threshold, run } => {
                if run >= threshold {
                    Action::Cooperate
                } else {
                    Action::Defect
                }
            }
        }
    }

    fn observe(&mut self, learner: Action) {
        match self {
            OpponentModel::TitForTat { last_learner } => *last_learner = Some(learner),
            OpponentModel::Primitive { run, .. } => {
                *run = if learner == Action::Defect { *run + 1 } else { 0 };
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    pub matrix: LossMatrix,
    pub opponent: OpponentModel,
    t: u64,
}

impl MatrixGame {
    pub fn new(matrix: LossMatrix, opponent: OpponentModel) -> Result<Self> {
        matrix.validate_unit()?;
        Ok(MatrixGame { matrix, opponent, t: 1 })
    }
}

impl Game for MatrixGame {
    fn play(&mut self, ours: Action) -> Result<Outcome> {
        let theirs = self.opponent.next();
        self.opponent.observe(ours);
        self.t += 1;
        Ok(Outcome { opponent: Some(theirs), loss: self.matrix.loss(ours, theirs) })
    }

    fn basic_time(&self) -> u64 {
        self.t
    }
}

pub fn make_pd_tit_for_tat(matrix: LossMatrix) -> Result<MatrixGame> {
    matrix.validate_prisoners_dilemma()?;
    MatrixGame::new(matrix, OpponentModel::TitForTat { last_learner: None })
}

pub fn make_chicken(threshold: u64) -> Result<MatrixGame> {
    make_chicken_with(LossMatrix::CHICKEN, threshold)
}

pub fn make_chicken_with(matrix: LossMatrix, threshold: u64) -> Result<MatrixGame> {
    if threshold == 0 {
        return Err(FoeError::InvalidParameter("primitive opponent threshold must be >= 1".into()));
    }
    MatrixGame::new(matrix, OpponentModel::Primitive { threshold, run: 0 })
}

/// Heaven-hell: loss 0 while in heaven, 1 in hell. Cursing once sends
/// everyone to hell. In the variant, a prayer streak that starts at basic
/// time `s` while in hell returns to heaven after `s` consecutive prayers;
/// the required length is fixed when the streak starts and any curse resets
/// the streak.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavenHell {
    variant: bool,
    in_hell: bool,
    t: u64,
    streak_start: Option<u64>,
    streak_len: u64,
}

pub fn make_heaven_hell() -> HeavenHell {
    HeavenHell { variant: false, in_hell: false, t: 1, streak_start: None, streak_len: 0 }
}

pub fn make_heaven_hell_variant() -> HeavenHell {
    HeavenHell { variant: true, ..make_heaven_hell() }
}

impl HeavenHell {
    pub fn in_hell(&self) -> bool {
        self.in_hell
    }
}

impl Game for HeavenHell {
    fn play(&mut self, ours: Action) -> Result<Outcome> {
        let now = self.t;
        self.t += 1;
        match (self.in_hell, ours) {
            (false, Action::Defect) => self.in_hell = true,
            (false, Action::Cooperate) => {}
            (true, Action::Defect) => {
                self.streak_start = None;
                self.streak_len = 0;
            }
            (true, Action::Cooperate) if self.variant => {
                let start = *self.streak_start.get_or_insert(now);
                self.streak_len += 1;
                if self.streak_len >= start {
                    self.in_hell = false;
                    self.streak_start = None;
                    self.streak_len = 0;
                }
            }
            (true, Action::Cooperate) => {}
        }
        Ok(Outcome { opponent: None, loss: if self.in_hell { 1.0 } else { 0.0 } })
    }

    fn basic_time(&self) -> u64 {
        self.t
    }
}
