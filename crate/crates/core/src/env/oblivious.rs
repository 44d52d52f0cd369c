use crate::error::{FoeError, Result};
use crate::pool::ExpertId;
use crate::rng::{Stream, ENV_STREAM};
use crate::schedules::ScheduleConfig;

use super::{Environment, LossLedger};

/// Where an oblivious adversary's losses come from. None of them look at
/// the master's actions.
#[derive(Debug, Clone)]
pub enum LossSource {
    /// Row `(t - 1) mod rows` is the loss vector of step `t`.
    Table(Vec<Vec<f64>>),
    /// Independent Bernoulli losses with the given means.
    Bernoulli { means: Vec<f64>, stream: Box<Stream> },
    /// Phases of doubling length `1, 2, 4, ...`; in phase `k` expert
    /// `k mod n` has loss 0 and every other expert loss 1. Whoever led
    /// so far is always the one about to be punished.
    Switching { n: usize },
    /// Every loss is zero.
    Zero { n: usize },
}

impl LossSource {
    pub fn bernoulli(means: Vec<f64>, seed: u64) -> Self {
        LossSource::Bernoulli { means, stream: Box::new(Stream::new(seed, ENV_STREAM)) }
    }

    fn width(&self) -> usize {
        match self {
            LossSource::Table(rows) => rows.first().map_or(0, Vec::len),
            LossSource::Bernoulli { means, .. } => means.len(),
            LossSource::Switching { n } | LossSource::Zero { n } => *n,
        }
    }

    fn losses(&mut self, t: u64) -> Vec<f64> {
        match self {
            LossSource::Table(rows) => rows[((t - 1) % rows.len() as u64) as usize].clone(),
            LossSource::Bernoulli { means, stream } => {
                means.iter().map(|&p| if stream.bernoulli(p) { 1.0 } else { 0.0 }).collect()
            }
            LossSource::Switching { n } => {
                // phase k covers t in [2^k, 2^{k+1})
                let phase = 63 - t.leading_zeros() as u64;
                let winner = (phase % *n as u64) as usize;
                (0..*n).map(|i| if i == winner { 0.0 } else { 1.0 }).collect()
            }
            LossSource::Zero { n } => vec![0.0; *n],
        }
    }
}

/// Master-scale oblivious adversary with loss bound taken from a schedule.
#[derive(Debug, Clone)]
pub struct ObliviousEnv {
    source: LossSource,
    schedules: ScheduleConfig,
    ledger: LossLedger,
}

pub fn make_oblivious(source: LossSource, schedules: ScheduleConfig) -> Result<ObliviousEnv> {
    let n = source.width();
    if n == 0 {
        return Err(FoeError::InvalidParameter("oblivious environment needs at least one expert".into()));
    }
    match &source {
        LossSource::Table(rows) => {
            if let Some(r) = rows.iter().find(|r| r.len() != n) {
                return Err(FoeError::InvalidParameter(format!("ragged loss table row of length {}", r.len())));
            }
            if let Some(x) = rows.iter().flatten().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(FoeError::InvalidParameter(format!("loss table entry {x} out of range")));
            }
            // rows are cycled, so each row must respect the smallest bound B_1
            let b1 = schedules.loss_bound(1)?;
            if let Some(x) = rows.iter().flatten().find(|x| **x > b1) {
                return Err(FoeError::InvalidParameter(format!("loss table entry {x} exceeds B_1 = {b1}")));
            }
        }
        LossSource::Bernoulli { means, .. } => {
            if let Some(p) = means.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(FoeError::InvalidParameter(format!("Bernoulli mean {p} not in [0,1]")));
            }
        }
        LossSource::Switching { .. } | LossSource::Zero { .. } => {}
    }
    Ok(ObliviousEnv { source, schedules, ledger: LossLedger::new(n) })
}

impl Environment for ObliviousEnv {
    fn num_experts(&self) -> usize {
        self.ledger.oracle_losses().len()
    }

    fn assign_losses(&mut self, t: u64) -> Result<()> {
        let bound = self.schedules.loss_bound(t)?;
        let losses = self.source.losses(t);
        if let Some(l) = losses.iter().find(|l| **l > bound) {
            return Err(FoeError::LossOutOfRange { t, loss: *l, bound });
        }
        self.ledger.begin(t, losses)
    }

    fn loss_bound(&self, t: u64) -> Result<f64> {
        self.schedules.loss_bound(t)
    }

    fn reveal(&mut self, expert: ExpertId) -> Result<f64> {
        self.ledger.reveal(expert)
    }

    fn ledger(&self) -> &LossLedger {
        &self.ledger
    }
}
