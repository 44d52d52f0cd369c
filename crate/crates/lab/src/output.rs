//! On-disk artifacts: JSONL trajectories, CSV summaries, the aggregate
//! table and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::value::RawValue;

use foe_core::analysis::log_checkpoints;
use foe_core::env::Action;
use foe_core::{BasicTrajectory, StepRecord, Trajectory};

use crate::LabError;

/// A float written with 17 significant digits so it parses back exactly.
struct F17(f64);

impl Serialize for F17 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Serialize)]
struct BlockLine {
    start: u64,
    length: u64,
    loss: F17,
}

#[derive(Serialize)]
struct BasicLine {
    t_basic: u64,
    ours: Action,
    opponent: Option<Action>,
    loss: F17,
}

#[derive(Serialize)]
struct StepLine<'a> {
    t: u64,
    explored: bool,
    chosen: usize,
    expert: &'a str,
    true_loss: F17,
    est_loss_assigned: F17,
    active_count: usize,
    b_hat: F17,
    loss_bound: F17,
    gamma: F17,
    prior_prob: F17,
    foe_cum_loss: F17,
    #[serde(skip_serializing_if = "Option::is_none")]
    block: Option<BlockLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    basic: Option<Vec<BasicLine>>,
}

fn step_line<'a>(traj: &'a Trajectory, i: usize, rec: &StepRecord) -> StepLine<'a> {
    StepLine {
        t: rec.t,
        explored: rec.explored,
        chosen: rec.chosen,
        expert: &traj.labels[rec.chosen],
        true_loss: F17(rec.true_loss),
        est_loss_assigned: F17(rec.est_loss_assigned),
        active_count: rec.active_count,
        b_hat: F17(rec.b_hat),
        loss_bound: F17(rec.loss_bound),
        gamma: F17(rec.gamma),
        prior_prob: F17(rec.prior_prob),
        foe_cum_loss: F17(traj.foe_cumulative[i]),
        block: None,
        basic: None,
    }
}

fn push_json(buf: &mut String, line: &impl Serialize) {
    buf.push_str(&serde_json::to_string(line).expect("trajectory line serializes"));
    buf.push('\n');
}

pub fn trajectory_jsonl(traj: &Trajectory) -> String {
    let mut buf = String::new();
    for (i, rec) in traj.steps.iter().enumerate() {
        push_json(&mut buf, &step_line(traj, i, rec));
    }
    buf
}

/// One line per master step; each line carries its block and the basic
/// steps played in it.
pub fn basic_trajectory_jsonl(traj: &BasicTrajectory) -> String {
    let mut buf = String::new();
    let master = &traj.master;
    for (i, (rec, block)) in master.steps.iter().zip(&traj.blocks).enumerate() {
        let first = (block.start - 1) as usize;
        let steps = &traj.basic_steps[first..first + block.len as usize];
        let mut line = step_line(master, i, rec);
        line.block = Some(BlockLine { start: block.start, length: block.len, loss: F17(block.loss) });
        line.basic = Some(
            steps
                .iter()
                .map(|s| BasicLine { t_basic: s.t_basic, ours: s.ours, opponent: s.opponent, loss: F17(s.loss) })
                .collect(),
        );
        push_json(&mut buf, &line);
    }
    buf
}

fn csv_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn master_header(traj: &Trajectory) -> String {
    let mut h = String::from("t,foe_cum_loss");
    for label in &traj.labels {
        let _ = write!(h, ",cum_loss_{}", csv_label(label));
    }
    h.push_str(",best_cum_loss,regret_vs_best");
    h
}

fn master_row(traj: &Trajectory, i: usize) -> String {
    let experts = &traj.expert_cumulative[i];
    let best = experts.iter().copied().fold(f64::INFINITY, f64::min);
    let foe = traj.foe_cumulative[i];
    let mut row = format!("{},{}", traj.steps[i].t, foe);
    for v in experts {
        let _ = write!(row, ",{v}");
    }
    let _ = write!(row, ",{best},{}", foe - best);
    row
}

pub fn summary_csv(traj: &Trajectory) -> String {
    let mut buf = master_header(traj);
    buf.push('\n');
    for i in 0..traj.steps.len() {
        buf.push_str(&master_row(traj, i));
        buf.push('\n');
    }
    buf
}

pub fn basic_summary_csv(traj: &BasicTrajectory) -> String {
    let master = &traj.master;
    let mut buf = master_header(master);
    buf.push_str(",block_start,block_length,controlling_expert,block_loss,running_avg_loss\n");
    let mut basic_total = 0.0;
    let mut basic_count = 0u64;
    for (i, block) in traj.blocks.iter().enumerate().take(master.steps.len()) {
        basic_total += block.loss;
        basic_count += block.len;
        let _ = writeln!(
            buf,
            "{},{},{},{},{},{}",
            master_row(master, i),
            block.start,
            block.len,
            csv_label(&master.labels[block.expert]),
            block.loss,
            basic_total / basic_count as f64,
        );
    }
    buf
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Regret statistics across seeds at logarithmically spaced master steps.
/// Seeds whose run is shorter than a checkpoint are left out of that row.
pub fn aggregate_csv(trajs: &[&Trajectory]) -> String {
    let longest = trajs.iter().map(|t| t.horizon()).max().unwrap_or(0);
    let mut buf = String::from(
        "t,seeds,mean_foe_cum_loss,mean_regret_vs_best,median_regret_vs_best,mean_per_round_regret,median_per_round_regret\n",
    );
    for t in log_checkpoints(longest) {
        let mut losses = Vec::new();
        let mut regrets = Vec::new();
        for traj in trajs {
            if let Some((foe, experts)) = traj.totals_at(t) {
                let best = experts.iter().copied().fold(f64::INFINITY, f64::min);
                losses.push(foe);
                regrets.push(foe - best);
            }
        }
        if regrets.is_empty() {
            continue;
        }
        let per_round: Vec<f64> = regrets.iter().map(|r| r / t as f64).collect();
        let _ = writeln!(
            buf,
            "{t},{},{},{},{},{},{}",
            regrets.len(),
            mean(&losses),
            mean(&regrets),
            median(&regrets),
            mean(&per_round),
            median(&per_round),
        );
    }
    buf
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), LabError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", path.display()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(contents).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io)
}
