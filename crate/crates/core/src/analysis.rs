//! Regret, numeric evaluation of the adaptive-adversary regret bound, and
//! Monte-Carlo validators for the statistical properties the bound rests
//! on (unbiased estimates, the exploration mixture, the FPL/IFPL gap and
//! the martingale envelope).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{FoeError, Result};
use crate::master::{foe_step, Trajectory};
use crate::numeric::{mean_and_stderr, CompensatedSum};
use crate::pool::{ExpertId, PoolState};
use crate::rng::Streams;
use crate::schedules::{estimated_loss_bound, ScheduleConfig};
use crate::selectors::{fpl_select, ifpl_select, PerturbationDraw};

/// Standard errors allowed by every Monte-Carlo comparison.
pub const SIGMA_TOLERANCE: f64 = 3.0;

/// `l^FoE_{1:T} - l^i_{1:T}`.
pub fn regret(trajectory: &Trajectory, expert: ExpertId) -> Result<f64> {
    let totals = trajectory.expert_totals();
    let own = totals.get(expert).ok_or(FoeError::UnknownExpert(expert))?;
    Ok(trajectory.total_loss() - own)
}

/// Regret against the best expert in hindsight.
pub fn regret_vs_best(trajectory: &Trajectory) -> f64 {
    trajectory.total_loss() - trajectory.best_expert_total()
}

/// `(l^FoE_{1:T} - min_i l^i_{1:T}) / T` after the first `horizon` steps.
pub fn per_round_regret(trajectory: &Trajectory, horizon: u64) -> Option<f64> {
    let (foe, experts) = trajectory.totals_at(horizon)?;
    let best = experts.iter().copied().fold(f64::INFINITY, f64::min);
    Some((foe - best) / horizon as f64)
}

/// Checkpoints `1, 2, 5, 10, 20, 50, ...` up to `horizon`, plus `horizon`.
pub fn log_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let c = m * decade;
            if c > horizon {
                break 'outer;
            }
            out.push(c);
        }
        decade = match decade.checked_mul(10) {
            Some(d) => d,
            None => break,
        };
    }
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

/// Per-round regret against the best expert at logarithmic checkpoints.
pub fn hannan_series(trajectory: &Trajectory) -> Vec<(u64, f64)> {
    log_checkpoints(trajectory.horizon())
        .into_iter()
        .filter_map(|t| per_round_regret(trajectory, t).map(|r| (t, r)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// Holds with probability at least `1 - delta_T`.
    HighProbability,
    /// Bound on the expected loss.
    Expectation,
}

/// Every additive term of the regret bound for one expert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub expert: ExpertId,
    pub horizon: u64,
    pub variant: BoundVariant,
    pub delta: f64,
    /// `(k^i + 1) / eta_T`
    pub complexity_term: f64,
    /// `sum_{t < tau^i} B_hat_t`
    pub preentry_term: f64,
    /// `sum_t gamma_t eta_t B_hat_t^2`
    pub drift_term: f64,
    /// `sum_t gamma_t B_t`
    pub exploration_term: f64,
    /// `sqrt(2 ln(4/delta) sum_t B_hat_t)`
    pub radical_estimated: f64,
    /// `sqrt(2 ln(4/delta) sum_t B_t^2)`; high-probability variant only.
    pub radical_bound: f64,
    /// `(delta/2) sum_t B_hat_t`; expectation variant only.
    pub tail_term: f64,
    pub total: f64,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bound for expert {} at T = {} ({:?}, delta = {:.3e})", self.expert, self.horizon, self.variant, self.delta)?;
        for (name, v) in [
            ("complexity", self.complexity_term),
            ("pre-entry", self.preentry_term),
            ("drift", self.drift_term),
            ("exploration", self.exploration_term),
            ("radical (estimated)", self.radical_estimated),
            ("radical (bound)", self.radical_bound),
            ("tail", self.tail_term),
        ] {
            writeln!(f, "  {name:<20} {v:>14.4}")?;
        }
        write!(f, "  {:<20} {:>14.4}", "total", self.total)
    }
}

/// Evaluates the regret bound for `expert` after `horizon` steps by direct
/// summation, using the loss bounds of `schedules` and the activation
/// schedule the pool actually realizes.
pub fn theorem1_bound(
    horizon: u64,
    expert: ExpertId,
    schedules: &ScheduleConfig,
    pool: &PoolState,
    variant: BoundVariant,
) -> Result<BoundReport> {
    theorem1_bound_with(horizon, expert, schedules, pool, variant, |t| schedules.loss_bound(t))
}

/// As [`theorem1_bound`] with an explicit loss-bound sequence `B_t` (for
/// example the floored block lengths of the reactive wrapper).
pub fn theorem1_bound_with(
    horizon: u64,
    expert: ExpertId,
    schedules: &ScheduleConfig,
    pool: &PoolState,
    variant: BoundVariant,
    loss_bound: impl Fn(u64) -> Result<f64>,
) -> Result<BoundReport> {
    let e = pool.expert(expert)?;
    let delta = schedules.confidence(horizon)?;
    let mut preentry = CompensatedSum::new();
    let mut drift = CompensatedSum::new();
    let mut exploration = CompensatedSum::new();
    let mut sum_b_hat = CompensatedSum::new();
    let mut sum_b_sq = CompensatedSum::new();
    for t in 1..=horizon {
        let b = loss_bound(t)?;
        let gamma = schedules.exploration_rate(t)?;
        let eta = schedules.learning_rate(t)?;
        let b_hat = estimated_loss_bound(b, gamma, pool.min_active_weight(t))?;
        if t < e.entering_time {
            preentry.add(b_hat);
        }
        drift.add(gamma * eta * b_hat * b_hat);
        exploration.add(gamma * b);
        sum_b_hat.add(b_hat);
        sum_b_sq.add(b * b);
    }
    let log_term = 2.0 * (4.0 / delta).ln();
    let complexity_term = (e.complexity + 1.0) / schedules.learning_rate(horizon)?;
    let radical_estimated = (log_term * sum_b_hat.value()).sqrt();
    let (radical_bound, tail_term) = match variant {
        BoundVariant::HighProbability => ((log_term * sum_b_sq.value()).sqrt(), 0.0),
        BoundVariant::Expectation => (0.0, delta / 2.0 * sum_b_hat.value()),
    };
    let terms = [
        complexity_term,
        preentry.value(),
        drift.value(),
        exploration.value(),
        radical_estimated,
        radical_bound,
        tail_term,
    ];
    Ok(BoundReport {
        expert,
        horizon,
        variant,
        delta,
        complexity_term,
        preentry_term: preentry.value(),
        drift_term: drift.value(),
        exploration_term: exploration.value(),
        radical_estimated,
        radical_bound,
        tail_term,
        total: terms.iter().copied().collect::<CompensatedSum>().value(),
    })
}

/// Outcome of one explicit case of the explore/exploit split for one expert.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeCase {
    /// Probability that the step charges this expert a positive estimate.
    pub charge_probability: f64,
    /// Expected estimated loss over all cases.
    pub expected_estimate: f64,
}

/// Exhaustive case analysis of one step: with probability `1 - gamma` no
/// active expert is charged; with probability `gamma * u^j` expert `j` is
/// charged `l^j / (u^j gamma)`.
pub fn charge_cases(losses: &[f64], prior: &[f64], gamma: f64) -> Vec<ChargeCase> {
    let mut out = vec![ChargeCase { charge_probability: 0.0, expected_estimate: 0.0 }; losses.len()];
    // r = 0 contributes nothing to anyone
    for (j, (&u, &l)) in prior.iter().zip(losses).enumerate() {
        if u <= 0.0 {
            continue;
        }
        let p = gamma * u;
        out[j].charge_probability += p;
        out[j].expected_estimate += p * (l / (u * gamma));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertCheck {
    pub expert: ExpertId,
    pub expected: f64,
    pub mean: f64,
    pub stderr: f64,
    pub passed: bool,
}

fn within(expected: f64, mean: f64, stderr: f64) -> bool {
    let diff = (mean - expected).abs();
    if stderr == 0.0 {
        diff <= 1e-12 * expected.abs().max(1.0)
    } else {
        diff <= SIGMA_TOLERANCE * stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub t: u64,
    pub samples: usize,
    pub gamma: f64,
    pub true_losses: Vec<f64>,
    pub charge_probabilities: Vec<f64>,
    /// Mean estimate per active expert against its true loss.
    pub experts: Vec<ExpertCheck>,
    /// Estimated loss of FPL's choice against `sum_i f^i l^i` with `f` the
    /// empirical FPL choice distribution.
    pub fpl: ExpertCheck,
    pub fpl_distribution: Vec<f64>,
    pub passed: bool,
}

/// Replays step `t = pool.clock()` `samples` times with fresh master
/// randomness from the same history and checks that estimated losses are
/// unbiased.
pub fn unbiasedness_validator<E: Environment + Clone>(
    env: &E,
    pool: &PoolState,
    schedules: &ScheduleConfig,
    samples: usize,
    seed: u64,
) -> Result<UnbiasednessReport> {
    let t = pool.clock();
    let gamma = schedules.exploration_rate(t)?;
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(FoeError::InvalidParameter("exploration rate is zero".into()));
    }
    if samples < 2 {
        return Err(FoeError::InvalidParameter("need at least two samples".into()));
    }
    let eta = schedules.learning_rate(t)?;
    let mut probe = env.clone();
    probe.assign_losses(t)?;
    let losses = probe.ledger().oracle_losses().to_vec();
    let prior = pool.finitized_prior(t)?;
    let cases = charge_cases(&losses, &prior, gamma);
    let active: Vec<ExpertId> = pool.active_ids(t).collect();

    let mut streams = Streams::new(seed);
    let mut per_expert: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); active.len()];
    let mut fpl_est = Vec::with_capacity(samples);
    let mut fpl_counts = vec![0usize; pool.len()];
    for _ in 0..samples {
        let estimates = replay_estimates(env, pool, schedules, &mut streams)?;
        for (slot, &i) in per_expert.iter_mut().zip(&active) {
            slot.push(estimates[i]);
        }
        let draw = PerturbationDraw::sample(pool, t, &mut streams.fpl);
        let choice = fpl_select(pool, t, eta, &draw)?;
        fpl_counts[choice] += 1;
        fpl_est.push(estimates[choice]);
    }

    let experts: Vec<ExpertCheck> = active
        .iter()
        .zip(&per_expert)
        .map(|(&i, xs)| {
            let (mean, stderr) = mean_and_stderr(xs);
            let expected = cases[i].expected_estimate;
            ExpertCheck { expert: i, expected, mean, stderr, passed: within(expected, mean, stderr) }
        })
        .collect();
    let fpl_distribution: Vec<f64> = fpl_counts.iter().map(|&c| c as f64 / samples as f64).collect();
    let fpl_expected: f64 = fpl_distribution.iter().zip(&losses).map(|(f, l)| f * l).sum();
    let (mean, stderr) = mean_and_stderr(&fpl_est);
    let fpl = ExpertCheck {
        expert: usize::MAX,
        expected: fpl_expected,
        mean,
        stderr,
        passed: within(fpl_expected, mean, stderr),
    };
    let passed = experts.iter().all(|c| c.passed) && fpl.passed;
    Ok(UnbiasednessReport {
        t,
        samples,
        gamma,
        true_losses: losses,
        charge_probabilities: cases.iter().map(|c| c.charge_probability).collect(),
        experts,
        fpl,
        fpl_distribution,
        passed,
    })
}

/// Runs one real master step on clones and returns the estimated loss it
/// assigned to every expert at that step.
fn replay_estimates<E: Environment + Clone>(
    env: &E,
    pool: &PoolState,
    schedules: &ScheduleConfig,
    streams: &mut Streams,
) -> Result<Vec<f64>> {
    let mut p = pool.clone();
    let mut e = env.clone();
    foe_step(&mut p, &mut e, schedules, streams)?;
    Ok(p.cum_est_loss().iter().zip(pool.cum_est_loss()).map(|(after, before)| after - before).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub t: u64,
    pub trials: usize,
    pub gamma: f64,
    pub frequency: f64,
    /// Binomial standard deviation of the frequency, `sqrt(gamma (1-gamma) / n)`.
    pub sigma: f64,
    pub passed: bool,
}

/// Empirical frequency of exploration at step `t = pool.clock()` over
/// repeated replays of the real master step.
pub fn exploration_mixture_check<E: Environment + Clone>(
    env: &E,
    pool: &PoolState,
    schedules: &ScheduleConfig,
    trials: usize,
    seed: u64,
) -> Result<MixtureReport> {
    let t = pool.clock();
    let gamma = schedules.exploration_rate(t)?;
    let mut streams = Streams::new(seed);
    let mut explored = 0usize;
    for _ in 0..trials {
        let mut p = pool.clone();
        let mut e = env.clone();
        if foe_step(&mut p, &mut e, schedules, &mut streams)?.explored {
            explored += 1;
        }
    }
    let frequency = explored as f64 / trials as f64;
    let sigma = (gamma * (1.0 - gamma) / trials as f64).sqrt();
    let passed = within(gamma, frequency, sigma);
    Ok(MixtureReport { t, trials, gamma, frequency, sigma, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub t: u64,
    pub samples: usize,
    /// `eta_t * B_hat_t`
    pub eta_b_hat: f64,
    pub mean_fpl: f64,
    pub mean_ifpl: f64,
    /// Standard error of `l_hat^FPL - e^{eta B_hat} l_hat^IFPL`.
    pub stderr: f64,
    /// Fraction of samples where FPL and IFPL picked different experts.
    pub disagreement: f64,
    pub passed: bool,
}

/// Compares the expected estimated loss of FPL and of the infeasible FPL at
/// step `t = pool.clock()`, sharing one perturbation draw per sample:
/// `E[l_hat^FPL] <= e^{eta B_hat} E[l_hat^IFPL]` up to sampling error.
pub fn fpl_ifpl_gap_check<E: Environment + Clone>(
    env: &E,
    pool: &PoolState,
    schedules: &ScheduleConfig,
    samples: usize,
    seed: u64,
) -> Result<GapReport> {
    let t = pool.clock();
    let gamma = schedules.exploration_rate(t)?;
    let eta = schedules.learning_rate(t)?;
    let b_hat = estimated_loss_bound(env.loss_bound(t)?, gamma, pool.min_active_weight(t))?;
    let factor = (eta * b_hat).exp();
    let mut streams = Streams::new(seed);
    let mut fpl = Vec::with_capacity(samples);
    let mut ifpl = Vec::with_capacity(samples);
    let mut diff = Vec::with_capacity(samples);
    let mut disagree = 0usize;
    for _ in 0..samples {
        let current = replay_estimates(env, pool, schedules, &mut streams)?;
        let draw = PerturbationDraw::sample(pool, t, &mut streams.fpl);
        let i = fpl_select(pool, t, eta, &draw)?;
        let j = ifpl_select(pool, t, eta, &current, &draw)?;
        if i != j {
            disagree += 1;
        }
        fpl.push(current[i]);
        ifpl.push(current[j]);
        diff.push(current[i] - factor * current[j]);
    }
    let (mean_fpl, _) = mean_and_stderr(&fpl);
    let (mean_ifpl, _) = mean_and_stderr(&ifpl);
    let (mean_diff, stderr) = mean_and_stderr(&diff);
    Ok(GapReport {
        t,
        samples,
        eta_b_hat: eta * b_hat,
        mean_fpl,
        mean_ifpl,
        stderr,
        disagreement: disagree as f64 / samples as f64,
        passed: mean_diff <= SIGMA_TOLERANCE * stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub runs: usize,
    pub delta: f64,
    /// `sqrt(2 ln(4/delta) sum_t B_t^2)`
    pub radius: f64,
    pub mean_loss: f64,
    pub violations: usize,
    pub violation_fraction: f64,
    /// `delta/2` plus three binomial standard deviations.
    pub allowed_fraction: f64,
    pub passed: bool,
}

/// Minimum ensemble size for [`martingale_envelope_check`].
pub const MIN_ENSEMBLE: usize = 30;

/// Checks the Azuma envelope on an ensemble of runs with identical
/// configuration, using the ensemble mean as the conditional-expectation
/// proxy.
pub fn martingale_envelope_check(ensemble: &[Trajectory], delta: f64) -> Result<EnvelopeReport> {
    if ensemble.len() < MIN_ENSEMBLE {
        return Err(FoeError::InvalidParameter(format!(
            "envelope check needs at least {MIN_ENSEMBLE} runs, got {}",
            ensemble.len()
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(FoeError::InvalidParameter(format!("delta {delta} not in (0,1]")));
    }
    let sum_b_sq: f64 = ensemble[0].steps.iter().map(|s| s.loss_bound * s.loss_bound).sum();
    let radius = (2.0 * (4.0 / delta).ln() * sum_b_sq).sqrt();
    let totals: Vec<f64> = ensemble.iter().map(Trajectory::total_loss).collect();
    let (mean_loss, _) = mean_and_stderr(&totals);
    let violations = totals.iter().filter(|&&x| x - mean_loss > radius).count();
    let n = ensemble.len() as f64;
    let p = delta / 2.0;
    let allowed_fraction = p + SIGMA_TOLERANCE * (p * (1.0 - p) / n).sqrt();
    let violation_fraction = violations as f64 / n;
    Ok(EnvelopeReport {
        runs: ensemble.len(),
        delta,
        radius,
        mean_loss,
        violations,
        violation_fraction,
        allowed_fraction,
        passed: violation_fraction <= allowed_fraction,
    })
}
