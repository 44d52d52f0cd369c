//! The Follow-or-Explore master loop.
//!
//! Each step: charge `B_hat_t` to inactive experts, flip the explore coin
//! with probability `gamma_t`, and either follow the perturbed leader
//! (charging every active expert 0) or play an expert drawn from the
//! finitized prior and charge it its importance-weighted loss.

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{FoeError, Result};
use crate::numeric::CompensatedSum;
use crate::pool::{ExpertId, PoolState};
use crate::rng::{Stream, Streams};
use crate::schedules::{estimated_loss_bound, ScheduleConfig};
use crate::selectors::{fpl_select, PerturbationDraw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub explored: bool,
    pub chosen: ExpertId,
    pub true_loss: f64,
    pub est_loss_assigned: f64,
    pub active_count: usize,
    pub b_hat: f64,
    pub loss_bound: f64,
    pub gamma: f64,
    /// Finitized-prior probability of the chosen expert.
    pub prior_prob: f64,
}

/// A complete run on the master time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub labels: Vec<String>,
    pub steps: Vec<StepRecord>,
    /// `l^FoE_{1:t}` after each step.
    pub foe_cumulative: Vec<f64>,
    /// `l^i_{1:t}` for every expert after each step, from the environment's
    /// bookkeeping.
    pub expert_cumulative: Vec<Vec<f64>>,
}

impl Trajectory {
    fn new(seed: u64, labels: Vec<String>) -> Self {
        Trajectory { seed, labels, steps: Vec::new(), foe_cumulative: Vec::new(), expert_cumulative: Vec::new() }
    }

    pub fn horizon(&self) -> u64 {
        self.steps.len() as u64
    }

    pub fn num_experts(&self) -> usize {
        self.labels.len()
    }

    pub fn total_loss(&self) -> f64 {
        self.foe_cumulative.last().copied().unwrap_or(0.0)
    }

    /// `(l^FoE_{1:T}, l^i_{1:T} for all i)` after the first `horizon` steps.
    pub fn totals_at(&self, horizon: u64) -> Option<(f64, &[f64])> {
        let idx = usize::try_from(horizon).ok()?.checked_sub(1)?;
        Some((*self.foe_cumulative.get(idx)?, self.expert_cumulative.get(idx)?))
    }

    pub fn expert_totals(&self) -> &[f64] {
        self.expert_cumulative.last().map_or(&[], Vec::as_slice)
    }

    pub fn best_expert_total(&self) -> f64 {
        self.expert_totals().iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn push(&mut self, rec: StepRecord, foe: f64, experts: Vec<f64>) {
        self.steps.push(rec);
        self.foe_cumulative.push(foe);
        self.expert_cumulative.push(experts);
    }
}

/// Executes one master step at `t = pool.clock()` and advances the clock.
pub fn foe_step<E: Environment + ?Sized>(
    pool: &mut PoolState,
    env: &mut E,
    schedules: &ScheduleConfig,
    streams: &mut Streams,
) -> Result<StepRecord> {
    let t = pool.clock();
    if env.num_experts() != pool.len() {
        return Err(FoeError::Contract(format!(
            "environment has {} experts, pool has {}",
            env.num_experts(),
            pool.len()
        )));
    }
    env.assign_losses(t)?;

    let loss_bound = env.loss_bound(t)?;
    let gamma = schedules.exploration_rate(t)?;
    let eta = schedules.learning_rate(t)?;
    let b_hat = estimated_loss_bound(loss_bound, gamma, pool.min_active_weight(t))?;
    let active_count = pool.active_count(t);

    pool.backfill_inactive(t, b_hat);

    let explored = streams.foe.bernoulli(gamma);
    let prior = pool.finitized_prior(t)?;
    let (chosen, true_loss, est) = if explored {
        let chosen = sample_index(&prior, &mut streams.foe);
        let loss = checked_loss(env.reveal(chosen)?, t, loss_bound)?;
        let est = loss / (prior[chosen] * gamma);
        pool.record_estimated_loss(chosen, est)?;
        (chosen, loss, est)
    } else {
        let draw = PerturbationDraw::sample(pool, t, &mut streams.fpl);
        let chosen = fpl_select(pool, t, eta, &draw)?;
        let loss = checked_loss(env.reveal(chosen)?, t, loss_bound)?;
        (chosen, loss, 0.0)
    };
    pool.advance();

    Ok(StepRecord {
        t,
        explored,
        chosen,
        true_loss,
        est_loss_assigned: est,
        active_count,
        b_hat,
        loss_bound,
        gamma,
        prior_prob: prior[chosen],
    })
}

fn checked_loss(loss: f64, t: u64, bound: f64) -> Result<f64> {
    if loss.is_nan() || loss < 0.0 || loss > bound {
        Err(FoeError::LossOutOfRange { t, loss, bound })
    } else {
        Ok(loss)
    }
}

/// Draws an index from a probability vector by inversion.
pub(crate) fn sample_index(probs: &[f64], stream: &mut Stream) -> usize {
    let x = stream.unit();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if x < acc {
            return i;
        }
    }
    // rounding left x just above the running total
    last
}

/// Runs `horizon` master steps from a fresh clock on a fresh environment,
/// then audits that exactly one loss was revealed per step.
pub fn run<E: Environment + ?Sized>(
    pool: &mut PoolState,
    env: &mut E,
    horizon: u64,
    schedules: &ScheduleConfig,
    seed: u64,
) -> Result<Trajectory> {
    run_while(pool, env, schedules, seed, |t, _| t <= horizon)
}

/// Runs master steps while `keep_going(t, env)` holds for the next step `t`.
pub(crate) fn run_while<E: Environment + ?Sized>(
    pool: &mut PoolState,
    env: &mut E,
    schedules: &ScheduleConfig,
    seed: u64,
    mut keep_going: impl FnMut(u64, &E) -> bool,
) -> Result<Trajectory> {
    if pool.clock() != 1 {
        return Err(FoeError::InvalidParameter("run needs a fresh pool".into()));
    }
    let mut streams = Streams::new(seed);
    let labels = pool.experts().iter().map(|e| e.label.clone()).collect();
    let mut traj = Trajectory::new(seed, labels);
    let mut foe_total = CompensatedSum::new();
    while keep_going(pool.clock(), env) {
        let rec = foe_step(pool, env, schedules, &mut streams)?;
        foe_total.add(rec.true_loss);
        traj.push(rec, foe_total.value(), env.ledger().cumulative());
    }
    env.ledger().audit(traj.horizon())?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_oblivious, LossSource};

    fn table_env(rows: Vec<Vec<f64>>) -> crate::env::ObliviousEnv {
        make_oblivious(LossSource::Table(rows), ScheduleConfig::default()).unwrap()
    }

    #[test]
    fn first_step_always_explores() {
        for seed in 0..50 {
            let mut pool = PoolState::uniform(3, 8).unwrap();
            let mut env = table_env(vec![vec![0.1, 0.2, 0.3]]);
            let rec = foe_step(&mut pool, &mut env, &ScheduleConfig::default(), &mut Streams::new(seed)).unwrap();
            assert!(rec.explored);
            assert_eq!(rec.gamma, 1.0);
            assert!((rec.est_loss_assigned - rec.true_loss * 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exploration_estimate_formula() {
        // u = 0.25, gamma = 0.5, l = 0.8
        assert_eq!(0.8 / (0.25 * 0.5), 6.4);
        let mut pool = PoolState::uniform(4, 8).unwrap();
        let mut env = table_env(vec![vec![0.8; 4]]);
        let s = ScheduleConfig::default();
        let mut streams = Streams::new(5);
        // gamma_16 = 0.5
        for _ in 1..16 {
            foe_step(&mut pool, &mut env, &s, &mut streams).unwrap();
        }
        let mut seen = false;
        for seed in 0..100 {
            let mut p = pool.clone();
            let mut e = env.clone();
            let rec = foe_step(&mut p, &mut e, &s, &mut Streams::new(seed)).unwrap();
            assert_eq!(rec.t, 16);
            assert_eq!(rec.gamma, 0.5);
            if rec.explored {
                assert_eq!(rec.est_loss_assigned, 6.4);
                seen = true;
            } else {
                assert_eq!(rec.est_loss_assigned, 0.0);
            }
        }
        assert!(seen);
    }

    #[test]
    fn single_expert_single_step() {
        let mut pool = PoolState::uniform(1, 8).unwrap();
        let mut env = table_env(vec![vec![0.4]]);
        let traj = run(&mut pool, &mut env, 1, &ScheduleConfig::default(), 9).unwrap();
        assert_eq!(traj.steps.len(), 1);
        assert_eq!(traj.steps[0].chosen, 0);
        assert_eq!(traj.total_loss(), 0.4);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let go = |seed| {
            let mut pool = PoolState::uniform(3, 8).unwrap();
            let mut env = make_oblivious(LossSource::bernoulli(vec![0.2, 0.5, 0.7], seed), ScheduleConfig::default()).unwrap();
            run(&mut pool, &mut env, 2000, &ScheduleConfig::default(), seed).unwrap()
        };
        assert_eq!(go(4), go(4));
        assert_ne!(go(4).steps, go(5).steps);
    }

    #[test]
    fn out_of_range_loss_is_a_contract_violation() {
        struct Liar(crate::env::LossLedger);
        impl Environment for Liar {
            fn num_experts(&self) -> usize {
                1
            }
            fn assign_losses(&mut self, t: u64) -> Result<()> {
                self.0.begin(t, vec![2.0])
            }
            fn loss_bound(&self, _t: u64) -> Result<f64> {
                Ok(1.0)
            }
            fn reveal(&mut self, e: ExpertId) -> Result<f64> {
                self.0.reveal(e)
            }
            fn ledger(&self) -> &crate::env::LossLedger {
                &self.0
            }
        }
        let mut pool = PoolState::uniform(1, 8).unwrap();
        let err = run(&mut pool, &mut Liar(crate::env::LossLedger::new(1)), 3, &ScheduleConfig::default(), 0).unwrap_err();
        assert!(matches!(err, FoeError::LossOutOfRange { .. }));
        assert!(err.is_contract_violation());
    }

    #[test]
    fn step_invariants_hold_with_growing_pool() {
        // program prior with alpha = 2: experts enter at 1, 4, 16, 64
        let s = ScheduleConfig { entering_exponent: 2, ..ScheduleConfig::default() };
        let mut pool = PoolState::program(&[1, 2, 3, 4], 2).unwrap();
        let mut env = make_oblivious(LossSource::bernoulli(vec![0.6, 0.4, 0.3, 0.1], 3), s).unwrap();
        let taus: Vec<u64> = pool.experts().iter().map(|e| e.entering_time).collect();
        assert_eq!(taus, vec![1, 4, 16, 64]);
        let traj = run(&mut pool, &mut env, 500, &s, 3).unwrap();
        for r in &traj.steps {
            assert!(r.est_loss_assigned <= r.b_hat * (1.0 + 1e-12));
            assert!(pool.experts()[r.chosen].is_active(r.t));
            if r.explored {
                assert_eq!(r.est_loss_assigned, r.true_loss / (r.prior_prob * r.gamma));
            } else {
                assert_eq!(r.est_loss_assigned, 0.0);
            }
            assert_eq!(r.active_count, taus.iter().filter(|&&tau| r.t >= tau).count());
        }
        env.ledger().audit(500).unwrap();
    }

    #[test]
    fn pre_entry_estimated_loss_is_maximal() {
        let s = ScheduleConfig { entering_exponent: 2, ..ScheduleConfig::default() };
        let mut pool = PoolState::program(&[1, 2], 2).unwrap();
        let mut env = make_oblivious(LossSource::Zero { n: 2 }, s).unwrap();
        let mut streams = Streams::new(1);
        let mut expected = 0.0;
        // expert 1 enters at t = 4
        for _ in 1..4 {
            let r = foe_step(&mut pool, &mut env, &s, &mut streams).unwrap();
            expected += r.b_hat;
        }
        assert_eq!(pool.cum_est_loss()[1], expected);
        assert_eq!(pool.cum_est_loss()[0], 0.0);
    }
}
