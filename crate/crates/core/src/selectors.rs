//! Follow-the-perturbed-leader selection, plus the infeasible variant that
//! also sees the current estimated loss vector. The infeasible selector is
//! an analysis device; the master never calls it.

use crate::error::{FoeError, Result};
use crate::pool::{ExpertId, PoolState};
use crate::rng::Stream;

/// One exponential perturbation per active expert, in increasing id order.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDraw {
    pub t: u64,
    pub values: Vec<f64>,
}

impl PerturbationDraw {
    /// Fresh independent unit-rate exponentials for the experts active at `t`.
    pub fn sample(pool: &PoolState, t: u64, stream: &mut Stream) -> Self {
        let values = (0..pool.active_count(t)).map(|_| stream.exponential()).collect();
        PerturbationDraw { t, values }
    }

    pub fn from_values(t: u64, values: Vec<f64>) -> Self {
        PerturbationDraw { t, values }
    }
}

/// `argmin_i eta * l_hat^i_{<t} + k^i - q^i` over active experts.
pub fn fpl_select(pool: &PoolState, t: u64, eta: f64, draw: &PerturbationDraw) -> Result<ExpertId> {
    select(pool, t, eta, None, draw)
}

/// Like [`fpl_select`] but scores use `l_hat^i_{<t} + current^i`.
pub fn ifpl_select(
    pool: &PoolState,
    t: u64,
    eta: f64,
    current_est_loss: &[f64],
    draw: &PerturbationDraw,
) -> Result<ExpertId> {
    if current_est_loss.len() != pool.len() {
        return Err(FoeError::InvalidParameter(format!(
            "current loss vector has {} entries for {} experts",
            current_est_loss.len(),
            pool.len()
        )));
    }
    select(pool, t, eta, Some(current_est_loss), draw)
}

fn select(
    pool: &PoolState,
    t: u64,
    eta: f64,
    current: Option<&[f64]>,
    draw: &PerturbationDraw,
) -> Result<ExpertId> {
    let active = pool.active_count(t);
    if active == 0 {
        return Err(FoeError::EmptyActiveSet(t));
    }
    if draw.values.len() != active {
        return Err(FoeError::InvalidParameter(format!(
            "perturbation draw has {} values for {active} active experts",
            draw.values.len()
        )));
    }
    let losses = pool.cum_est_loss();
    let mut best: Option<(ExpertId, f64)> = None;
    for (id, q) in pool.active_ids(t).zip(&draw.values) {
        let past = losses[id] + current.map_or(0.0, |c| c[id]);
        let score = eta * past + pool.experts()[id].complexity - q;
        // strict: ties go to the lowest id
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((id, score));
        }
    }
    Ok(best.map(|(id, _)| id).expect("active set checked nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_expert_pool(losses: [f64; 2], lengths: [u32; 2]) -> PoolState {
        let mut p = PoolState::program(&lengths, 8).unwrap();
        for (i, l) in losses.iter().enumerate() {
            p.record_estimated_loss(i, *l).unwrap();
        }
        p
    }

    #[test]
    fn fpl_score_arithmetic() {
        // k = (ln 2, ln 4); scores 0.1*10 + ln2 - 0.2 and 0.1*5 + ln4 - 0.1
        let weights = vec![("a".to_string(), 0.5), ("b".to_string(), 0.25)];
        let mut p = PoolState::from_weights(&weights, 1).unwrap();
        p.record_estimated_loss(0, 10.0).unwrap();
        p.record_estimated_loss(1, 5.0).unwrap();
        let s0 = 0.1 * 10.0 + 2f64.ln() - 0.2;
        let s1 = 0.1 * 5.0 + 4f64.ln() - 0.1;
        assert!((s0 - 1.4931471805599454).abs() < 1e-12);
        assert!((s1 - 1.7862943611198906).abs() < 1e-12);
        let draw = PerturbationDraw::from_values(2, vec![0.2, 0.1]);
        assert_eq!(fpl_select(&p, 2, 0.1, &draw).unwrap(), 0);
    }

    #[test]
    fn larger_perturbation_wins() {
        let p = two_expert_pool([0.0, 0.0], [1, 1]);
        let draw = PerturbationDraw::from_values(1, vec![0.9, 0.1]);
        assert_eq!(fpl_select(&p, 1, 1.0, &draw).unwrap(), 0);
        let draw = PerturbationDraw::from_values(1, vec![0.1, 0.9]);
        assert_eq!(fpl_select(&p, 1, 1.0, &draw).unwrap(), 1);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let p = two_expert_pool([0.0, 0.0], [1, 1]);
        let draw = PerturbationDraw::from_values(1, vec![0.5, 0.5]);
        assert_eq!(fpl_select(&p, 1, 1.0, &draw).unwrap(), 0);
    }

    #[test]
    fn single_active_expert() {
        let mut p = PoolState::program(&[1, 4], 8).unwrap();
        p.record_estimated_loss(0, 1e9).unwrap();
        let draw = PerturbationDraw::from_values(1, vec![0.0]);
        assert_eq!(fpl_select(&p, 1, 1.0, &draw).unwrap(), 0);
    }

    #[test]
    fn ifpl_uses_current_loss() {
        let p = two_expert_pool([0.0, 0.0], [1, 1]);
        let zero = PerturbationDraw::from_values(1, vec![0.0, 0.0]);
        assert_eq!(ifpl_select(&p, 1, 0.1, &[100.0, 0.0], &zero).unwrap(), 1);
        assert_eq!(fpl_select(&p, 1, 0.1, &zero).unwrap(), 0);
    }

    #[test]
    fn malformed_draw_rejected() {
        let p = two_expert_pool([0.0, 0.0], [1, 1]);
        let draw = PerturbationDraw::from_values(1, vec![0.0]);
        assert!(fpl_select(&p, 1, 1.0, &draw).is_err());
        assert!(ifpl_select(&p, 1, 1.0, &[0.0], &PerturbationDraw::from_values(1, vec![0.0, 0.0])).is_err());
    }

    proptest! {
        #[test]
        fn fpl_equals_ifpl_on_zero_current(
            l0 in 0.0f64..100.0, l1 in 0.0f64..100.0, l2 in 0.0f64..100.0,
            q in prop::collection::vec(0.0f64..10.0, 3), eta in 1e-4f64..1.0,
        ) {
            let mut p = PoolState::uniform(3, 8).unwrap();
            for (i, l) in [l0, l1, l2].into_iter().enumerate() { p.record_estimated_loss(i, l).unwrap(); }
            let draw = PerturbationDraw::from_values(1, q);
            prop_assert_eq!(fpl_select(&p, 1, eta, &draw).unwrap(), ifpl_select(&p, 1, eta, &[0.0; 3], &draw).unwrap());
        }

        #[test]
        fn common_shift_leaves_choice_unchanged(
            l in prop::collection::vec(0.0f64..50.0, 3), q in prop::collection::vec(0.0f64..5.0, 3),
            shift in 0.0f64..1000.0, eta in 1e-3f64..1.0,
        ) {
            let mut p = PoolState::uniform(3, 8).unwrap();
            for (i, x) in l.iter().enumerate() { p.record_estimated_loss(i, *x).unwrap(); }
            let draw = PerturbationDraw::from_values(1, q);
            let before = fpl_select(&p, 1, eta, &draw).unwrap();
            // adding the same current loss to everyone shifts every score equally
            let shifted = ifpl_select(&p, 1, eta, &[shift; 3], &draw).unwrap();
            // exact shift invariance can fail only on near-ties in floating point
            let scores: Vec<f64> = (0..3).map(|i| eta * l[i] + p.experts()[i].complexity - draw.values[i]).collect();
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted[1] - sorted[0] > 1e-9 * (1.0 + eta * shift));
            prop_assert_eq!(before, shifted);
        }

        #[test]
        fn selection_stays_in_active_set(lengths in prop::collection::vec(1u32..6, 1..6), t in 1u64..400, seed in 0u64..50) {
            let total: f64 = lengths.iter().map(|&l| 2f64.powi(-(l as i32))).sum();
            prop_assume!(total <= 1.0);
            let p = PoolState::program(&lengths, 2).unwrap();
            let mut s = Stream::new(seed, 1);
            let draw = PerturbationDraw::sample(&p, t, &mut s);
            let id = fpl_select(&p, t, 0.5, &draw).unwrap();
            prop_assert!(p.experts()[id].is_active(t));
        }
    }
}
