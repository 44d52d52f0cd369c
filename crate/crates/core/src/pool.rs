//! Expert registry: prior weights, complexities, entering times and the
//! cumulative estimated losses the master keeps for every expert.

use serde::{Deserialize, Serialize};

use crate::error::{FoeError, Result};
use crate::schedules::entering_time;

/// Slack allowed on `sum w <= 1` for floating-point sums of constructed priors.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

pub type ExpertId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expert {
    pub id: ExpertId,
    pub label: String,
    pub weight: f64,
    /// `-ln(weight)`.
    pub complexity: f64,
    pub entering_time: u64,
}

impl Expert {
    pub fn is_active(&self, t: u64) -> bool {
        t >= self.entering_time
    }
}

/// The master's view of its experts.
///
/// Experts are identified by their dense index into `experts`. The behaviour
/// of each expert lives in the environment (see [`crate::env`]), which uses
/// the same indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolState {
    experts: Vec<Expert>,
    cum_est_loss: Vec<f64>,
    clock: u64,
}

impl PoolState {
    /// Builds a pool from raw prior weights and labels. Experts are reordered
    /// by nonincreasing weight (stable), so ids follow that order.
    pub fn from_weights(weights: &[(String, f64)], entering_exponent: u32) -> Result<Self> {
        if weights.is_empty() {
            return Err(FoeError::InvalidParameter("expert pool must not be empty".into()));
        }
        if let Some((label, w)) = weights.iter().find(|(_, w)| !(*w > 0.0 && *w <= 1.0)) {
            return Err(FoeError::InvalidParameter(format!("expert {label:?} has weight {w} outside (0,1]")));
        }
        let total: f64 = weights.iter().map(|(_, w)| w).sum();
        if total > 1.0 + WEIGHT_SUM_TOLERANCE {
            return Err(FoeError::KraftViolation(total));
        }
        let mut order: Vec<&(String, f64)> = weights.iter().collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let w_max = order[0].1;
        let experts = order
            .into_iter()
            .enumerate()
            .map(|(id, (label, w))| {
                Ok(Expert {
                    id,
                    label: label.clone(),
                    weight: *w,
                    complexity: -w.ln(),
                    entering_time: entering_time(*w, w_max, entering_exponent)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n = experts.len();
        Ok(PoolState { experts, cum_est_loss: vec![0.0; n], clock: 1 })
    }

    /// `n` experts with weight `1/n` each, all active from `t = 1`.
    pub fn uniform(n: usize, entering_exponent: u32) -> Result<Self> {
        Self::uniform_labeled((0..n).map(|i| format!("expert-{i}")).collect(), entering_exponent)
    }

    pub fn uniform_labeled(labels: Vec<String>, entering_exponent: u32) -> Result<Self> {
        if labels.is_empty() {
            return Err(FoeError::InvalidParameter("uniform prior needs n >= 1".into()));
        }
        let w = 1.0 / labels.len() as f64;
        let weights: Vec<_> = labels.into_iter().map(|l| (l, w)).collect();
        Self::from_weights(&weights, entering_exponent)
    }

    /// Weights `2^{-len}` from declared program lengths.
    pub fn program(code_lengths: &[u32], entering_exponent: u32) -> Result<Self> {
        let labels = (0..code_lengths.len()).map(|i| format!("program-{i}")).collect();
        Self::program_labeled(labels, code_lengths, entering_exponent)
    }

    pub fn program_labeled(labels: Vec<String>, code_lengths: &[u32], entering_exponent: u32) -> Result<Self> {
        if code_lengths.is_empty() || labels.len() != code_lengths.len() {
            return Err(FoeError::InvalidParameter("need one positive code length per expert".into()));
        }
        if let Some(&len) = code_lengths.iter().find(|&&l| l == 0 || l > 1000) {
            return Err(FoeError::InvalidParameter(format!("code length {len} out of range")));
        }
        let weights: Vec<_> = labels
            .into_iter()
            .zip(code_lengths)
            .map(|(l, &len)| (l, 2f64.powi(-(len as i32))))
            .collect();
        let mut pool = Self::from_weights(&weights, entering_exponent)?;
        // exact len * ln 2 rather than -ln(2^-len)
        let mut sorted: Vec<u32> = code_lengths.to_vec();
        sorted.sort_unstable();
        for (e, len) in pool.experts.iter_mut().zip(sorted) {
            e.complexity = f64::from(len) * std::f64::consts::LN_2;
        }
        Ok(pool)
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn expert(&self, id: ExpertId) -> Result<&Expert> {
        self.experts.get(id).ok_or(FoeError::UnknownExpert(id))
    }

    /// The next master step to be played.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn advance(&mut self) {
        self.clock += 1;
    }

    /// `l_hat^i_{<t}` for every expert.
    pub fn cum_est_loss(&self) -> &[f64] {
        &self.cum_est_loss
    }

    pub fn active_ids(&self, t: u64) -> impl Iterator<Item = ExpertId> + '_ {
        self.experts.iter().filter(move |e| e.is_active(t)).map(|e| e.id)
    }

    pub fn active_count(&self, t: u64) -> usize {
        self.active_ids(t).count()
    }

    pub fn min_active_weight(&self, t: u64) -> Option<f64> {
        self.experts.iter().filter(|e| e.is_active(t)).map(|e| e.weight).min_by(f64::total_cmp)
    }

    /// Prior restricted to the experts active at `t` and renormalized.
    /// Inactive experts get probability zero.
    pub fn finitized_prior(&self, t: u64) -> Result<Vec<f64>> {
        let mass: f64 = self.experts.iter().filter(|e| e.is_active(t)).map(|e| e.weight).sum();
        if mass <= 0.0 {
            return Err(FoeError::EmptyActiveSet(t));
        }
        Ok(self
            .experts
            .iter()
            .map(|e| if e.is_active(t) { e.weight / mass } else { 0.0 })
            .collect())
    }

    /// Charges `b_hat` to every expert inactive at `t`.
    pub fn backfill_inactive(&mut self, t: u64, b_hat: f64) {
        for (e, acc) in self.experts.iter().zip(self.cum_est_loss.iter_mut()) {
            if !e.is_active(t) {
                *acc += b_hat;
            }
        }
    }

    pub fn record_estimated_loss(&mut self, id: ExpertId, value: f64) -> Result<()> {
        if value < 0.0 || value.is_nan() {
            return Err(FoeError::NegativeLoss(value));
        }
        let acc = self.cum_est_loss.get_mut(id).ok_or(FoeError::UnknownExpert(id))?;
        *acc += value;
        Ok(())
    }
}
