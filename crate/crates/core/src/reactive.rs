//! The increasing-block wrapper: the master runs on a slow clock and hands
//! control of the basic game to the selected expert for `B_t` consecutive
//! basic steps. The block's summed basic loss is the master-scale loss.

use serde::{Deserialize, Serialize};

use crate::env::{Action, BasicStep, Environment, Game, LossLedger, Strategy};
use crate::error::{FoeError, Result};
use crate::master::{run_while, Trajectory};
use crate::pool::{ExpertId, PoolState};
use crate::schedules::ScheduleConfig;

/// How many basic steps master step `t` controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockLengths {
    /// One basic step per master step: plain FoE on the basic game.
    Unit,
    /// `floor(B_t)` from the schedule.
    Schedule(ScheduleConfig),
}

impl BlockLengths {
    pub fn length(&self, t: u64) -> Result<u64> {
        match self {
            BlockLengths::Unit => Ok(1),
            BlockLengths::Schedule(s) => s.block_length(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub t: u64,
    /// Basic time of the first step in the block.
    pub start: u64,
    /// Basic steps actually played (the last block may be truncated).
    pub len: u64,
    pub expert: ExpertId,
    pub loss: f64,
}

/// Adapts a basic game and a set of expert strategies into a master-scale
/// environment.
///
/// The hidden loss of expert `i` at master step `t` is what `i` would incur
/// if it controlled the coming block from the current game state; it is
/// computed on a clone of the game before the master chooses.
pub struct BlockEnvironment<G: Game> {
    game: G,
    strategies: Vec<Box<dyn Strategy>>,
    lengths: BlockLengths,
    basic_horizon: u64,
    next_basic: u64,
    pending: Option<(u64, u64)>,
    history: Vec<BasicStep>,
    blocks: Vec<Block>,
    ledger: LossLedger,
}

impl<G: Game> BlockEnvironment<G> {
    pub fn new(game: G, strategies: Vec<Box<dyn Strategy>>, lengths: BlockLengths, basic_horizon: u64) -> Result<Self> {
        if strategies.is_empty() {
            return Err(FoeError::InvalidParameter("need at least one expert strategy".into()));
        }
        if basic_horizon == 0 {
            return Err(FoeError::InvalidParameter("basic horizon must be >= 1".into()));
        }
        let n = strategies.len();
        Ok(BlockEnvironment {
            next_basic: game.basic_time(),
            game,
            strategies,
            lengths,
            basic_horizon,
            pending: None,
            history: Vec::new(),
            blocks: Vec::new(),
            ledger: LossLedger::new(n),
        })
    }

    /// True once every basic step up to the horizon has been played.
    pub fn exhausted(&self) -> bool {
        self.next_basic > self.basic_horizon
    }

    pub fn history(&self) -> &[BasicStep] {
        &self.history
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    fn block_len(&self, t: u64) -> Result<u64> {
        let remaining = self.basic_horizon + 1 - self.next_basic;
        Ok(self.lengths.length(t)?.min(remaining))
    }

    /// Plays `len` steps of `expert` on `game`, extending `history`.
    fn play_block(
        game: &mut G,
        strategy: &dyn Strategy,
        history: &mut Vec<BasicStep>,
        t: u64,
        expert: ExpertId,
        len: u64,
    ) -> Result<f64> {
        let mut total = 0.0;
        for _ in 0..len {
            let t_basic = game.basic_time();
            let ours: Action = strategy.act(history);
            let out = game.play(ours)?;
            if !(0.0..=1.0).contains(&out.loss) {
                return Err(FoeError::LossOutOfRange { t: t_basic, loss: out.loss, bound: 1.0 });
            }
            history.push(BasicStep { t_basic, master_t: t, expert, ours, opponent: out.opponent, loss: out.loss });
            total += out.loss;
        }
        Ok(total)
    }
}

impl<G: Game> Environment for BlockEnvironment<G> {
    fn num_experts(&self) -> usize {
        self.strategies.len()
    }

    fn assign_losses(&mut self, t: u64) -> Result<()> {
        if self.exhausted() {
            return Err(FoeError::Contract(format!("basic horizon {} already reached", self.basic_horizon)));
        }
        let len = self.block_len(t)?;
        let mark = self.history.len();
        let mut losses = Vec::with_capacity(self.strategies.len());
        for (i, s) in self.strategies.iter().enumerate() {
            let mut lookahead = self.game.clone();
            let loss = Self::play_block(&mut lookahead, s.as_ref(), &mut self.history, t, i, len);
            self.history.truncate(mark);
            losses.push(loss?);
        }
        self.pending = Some((t, len));
        self.ledger.begin(t, losses)
    }

    fn loss_bound(&self, t: u64) -> Result<f64> {
        Ok(self.lengths.length(t)? as f64)
    }

    fn reveal(&mut self, expert: ExpertId) -> Result<f64> {
        let promised = self.ledger.reveal(expert)?;
        let (t, len) = self.pending.take().ok_or_else(|| FoeError::Contract("no block pending".into()))?;
        let start = self.next_basic;
        let actual = Self::play_block(&mut self.game, self.strategies[expert].as_ref(), &mut self.history, t, expert, len)?;
        if actual.to_bits() != promised.to_bits() {
            return Err(FoeError::Contract(format!(
                "game diverged from its look-ahead at t = {t}: {actual} != {promised}"
            )));
        }
        self.next_basic += len;
        self.blocks.push(Block { t, start, len, expert, loss: actual });
        Ok(actual)
    }

    fn ledger(&self) -> &LossLedger {
        &self.ledger
    }
}

/// Basic-scale record of a reactive run together with its master view.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicTrajectory {
    pub basic_steps: Vec<BasicStep>,
    pub blocks: Vec<Block>,
    pub master: Trajectory,
}

impl BasicTrajectory {
    pub fn basic_horizon(&self) -> u64 {
        self.basic_steps.len() as u64
    }

    /// Master step controlling basic step `t_basic`.
    pub fn master_step_of(&self, t_basic: u64) -> Option<u64> {
        let idx = usize::try_from(t_basic).ok()?.checked_sub(1)?;
        self.basic_steps.get(idx).map(|s| s.master_t)
    }

    /// Mean basic loss over the last `fraction` of basic steps.
    pub fn tail_mean_loss(&self, fraction: f64) -> f64 {
        let n = self.basic_steps.len();
        let k = ((n as f64) * fraction).round().max(1.0) as usize;
        let tail = &self.basic_steps[n - k.min(n)..];
        tail.iter().map(|s| s.loss).sum::<f64>() / tail.len() as f64
    }

    /// Frequency of `action` in our moves over the last `fraction` of steps.
    pub fn tail_action_frequency(&self, action: Action, fraction: f64) -> f64 {
        let n = self.basic_steps.len();
        let k = ((n as f64) * fraction).round().max(1.0) as usize;
        let tail = &self.basic_steps[n - k.min(n)..];
        tail.iter().filter(|s| s.ours == action).count() as f64 / tail.len() as f64
    }
}

/// Runs the block wrapper until `basic_horizon` basic steps have been
/// played. The final block is truncated at the horizon and its partial
/// loss is charged to the master step that selected it.
pub fn tilde_foe_run<G: Game>(
    pool: &mut PoolState,
    game: G,
    strategies: Vec<Box<dyn Strategy>>,
    basic_horizon: u64,
    schedules: &ScheduleConfig,
    seed: u64,
) -> Result<BasicTrajectory> {
    run_blocks(pool, game, strategies, BlockLengths::Schedule(*schedules), basic_horizon, schedules, seed)
}

/// Block run with explicit block lengths; `BlockLengths::Unit` gives plain
/// FoE on the basic game.
pub fn run_blocks<G: Game>(
    pool: &mut PoolState,
    game: G,
    strategies: Vec<Box<dyn Strategy>>,
    lengths: BlockLengths,
    basic_horizon: u64,
    schedules: &ScheduleConfig,
    seed: u64,
) -> Result<BasicTrajectory> {
    let mut env = BlockEnvironment::new(game, strategies, lengths, basic_horizon)?;
    let master = run_while(pool, &mut env, schedules, seed, |_, e| !e.exhausted())?;
    Ok(BasicTrajectory { basic_steps: env.history, blocks: env.blocks, master })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{constant_strategy, lookup_strategy, make_heaven_hell, make_pd_tit_for_tat, LossMatrix};

    fn pd_experts() -> Vec<Box<dyn Strategy>> {
        vec![Box::new(constant_strategy(Action::Cooperate)), Box::new(constant_strategy(Action::Defect))]
    }

    #[test]
    fn early_blocks_have_length_one() {
        let s = ScheduleConfig::reactive();
        let mut pool = PoolState::uniform(2, 16).unwrap();
        let game = make_pd_tit_for_tat(LossMatrix::PRISONERS_DILEMMA).unwrap();
        let traj = tilde_foe_run(&mut pool, game, pd_experts(), 15, &s, 1).unwrap();
        assert_eq!(traj.master.horizon(), 15);
        for (i, step) in traj.basic_steps.iter().enumerate() {
            assert_eq!(step.t_basic, i as u64 + 1);
            assert_eq!(step.master_t, step.t_basic);
        }
    }

    #[test]
    fn block_lengths_follow_schedule() {
        let s = ScheduleConfig::reactive();
        let b = BlockLengths::Schedule(s);
        assert_eq!(b.length(65_535).unwrap(), 1);
        assert_eq!(b.length(65_536).unwrap(), 2);
        assert_eq!(BlockLengths::Unit.length(1 << 40).unwrap(), 1);
    }

    #[test]
    fn time_bookkeeping_and_truncation() {
        // alpha-independent growth: B_t = floor(t^{1/2}) gives blocks 1,1,1,2,2,2,2,2,3,...
        let s = ScheduleConfig {
            loss_bound_regime: crate::schedules::LossBoundRegime::Power { beta: "1/2".parse().unwrap() },
            ..ScheduleConfig::reactive()
        };
        let mut pool = PoolState::uniform(2, 16).unwrap();
        let game = make_pd_tit_for_tat(LossMatrix::PRISONERS_DILEMMA).unwrap();
        let traj = tilde_foe_run(&mut pool, game, pd_experts(), 100, &s, 7).unwrap();
        assert_eq!(traj.basic_horizon(), 100);
        let mut start = 1;
        for (block, rec) in traj.blocks.iter().zip(&traj.master.steps) {
            assert_eq!(block.start, start);
            assert_eq!(block.t, rec.t);
            let full = s.block_length(block.t).unwrap();
            assert!(block.len == full || block.start + block.len == 101);
            assert!(rec.true_loss >= 0.0 && rec.true_loss <= rec.loss_bound);
            assert_eq!(rec.true_loss, block.loss);
            let basic: f64 = traj.basic_steps[(block.start - 1) as usize..(block.start - 1 + block.len) as usize]
                .iter()
                .map(|b| b.loss)
                .sum();
            assert_eq!(basic, block.loss);
            start += block.len;
        }
        assert_eq!(start, 101);
        assert_eq!(traj.master_step_of(1), Some(1));
        assert_eq!(traj.master_step_of(101), None);
    }

    #[test]
    fn counterfactual_losses_match_hand_simulation() {
        // after our defection, always-C controlling three steps: 1.0 + 0.2 + 0.2
        let mut g = make_pd_tit_for_tat(LossMatrix::PRISONERS_DILEMMA).unwrap();
        g.play(Action::Defect).unwrap();
        let s = ScheduleConfig {
            loss_bound_regime: crate::schedules::LossBoundRegime::Power { beta: "1/2".parse().unwrap() },
            ..ScheduleConfig::reactive()
        };
        let mut env = BlockEnvironment::new(g, pd_experts(), BlockLengths::Schedule(s), 100).unwrap();
        // B_9 = 9^{1/2} = 3
        env.assign_losses(9).unwrap();
        let hidden = env.ledger().oracle_losses().to_vec();
        assert!((hidden[0] - 1.4).abs() < 1e-12);
        assert!((hidden[1] - 2.4).abs() < 1e-12);
        assert_eq!(env.reveal(0).unwrap(), hidden[0]);
        let moves: Vec<_> = env.history().iter().map(|b| (b.ours, b.opponent.unwrap())).collect();
        use Action::{Cooperate as C, Defect as D};
        assert_eq!(moves, vec![(C, D), (C, C), (C, C)]);
    }

    #[test]
    fn tit_for_tat_trace_property() {
        let s = ScheduleConfig::reactive();
        let mut pool = PoolState::uniform(2, 16).unwrap();
        let game = make_pd_tit_for_tat(LossMatrix::PRISONERS_DILEMMA).unwrap();
        let traj = tilde_foe_run(&mut pool, game, pd_experts(), 2000, &s, 3).unwrap();
        assert_eq!(traj.basic_steps[0].opponent, Some(Action::Cooperate));
        for w in traj.basic_steps.windows(2) {
            assert_eq!(w[1].opponent, Some(w[0].ours));
        }
    }

    #[test]
    fn heaven_hell_everyone_goes_to_hell() {
        let s = ScheduleConfig::reactive();
        let mut pool = PoolState::uniform(2, 16).unwrap();
        let experts = vec![lookup_strategy("pray").unwrap().0, lookup_strategy("curse").unwrap().0];
        let traj = tilde_foe_run(&mut pool, make_heaven_hell(), experts, 200, &s, 0).unwrap();
        let first_curse = traj.basic_steps.iter().position(|b| b.ours == Action::Defect).unwrap();
        assert!(traj.basic_steps[first_curse..].iter().all(|b| b.loss == 1.0));
        assert!(traj.basic_steps[..first_curse].iter().all(|b| b.loss == 0.0));
        let totals = traj.master.expert_totals();
        // after the curse, the praying expert is charged 1 per step too
        assert!(totals[0] >= (200 - first_curse - 1) as f64);
    }

    #[test]
    fn unit_blocks_play_one_step_per_master_step() {
        let s = ScheduleConfig::reactive();
        let mut pool = PoolState::uniform(2, 16).unwrap();
        let game = make_pd_tit_for_tat(LossMatrix::PRISONERS_DILEMMA).unwrap();
        let traj = run_blocks(&mut pool, game, pd_experts(), BlockLengths::Unit, 70_000, &s, 2).unwrap();
        assert_eq!(traj.master.horizon(), 70_000);
        assert!(traj.blocks.iter().all(|b| b.len == 1));
    }
}
