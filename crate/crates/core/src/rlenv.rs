//! The scheduling MDP: one frame is chosen per decision step, several steps
//! may happen within a slot.
//!
//! A step from a state with an open RB budget serves the chosen frame with
//! `min(ceil(r / c), budget)` blocks and is classified as
//!
//! * type 1 (success): the frame completes and its row disappears;
//! * type 2 (exhaustion): the budget hits zero before the frame completes.
//!
//! A step from a state whose budget is zero, or whose frame set is empty, is a
//! type 3 slot transition: frames on their last budget slot are dropped, the
//! others age, new frames arrive and the channel and budget refresh. The
//! chosen row has no effect on such a step. Only type 3 steps carry reward,
//! equal to minus the summed weight of the dropped frames.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::schedulers::PriorityPolicy;
use crate::simcore::{priority_order, rbs_to_finish, EpisodeMetrics, EpisodeSpec, FrameId, SimError, Simulator};

pub const FEATURES: usize = 5;
pub const F_WEIGHT: usize = 0;
pub const F_REMAINING: usize = 1;
pub const F_RFDB: usize = 2;
pub const F_RATE: usize = 3;
pub const F_BUDGET: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("row {row} out of range for a state with {rows} rows")]
    IllegalRow { row: usize, rows: usize },
    #[error("the default action is only legal on an empty state")]
    DefaultOnNonEmpty,
    #[error("a row action was given for an empty state")]
    RowOnEmpty,
    #[error("episode is over")]
    Finished,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("policy error: {0}")]
    Policy(String),
}

/// One row `(w, remaining bits, rfdb, bits per RB, RBs left)` per waiting frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    pub rows: Vec<[f64; FEATURES]>,
    /// Frame identity of every row.
    pub frames: Vec<FrameId>,
    pub slot: u32,
    /// Decision step counter within the episode.
    pub step: u64,
}

impl StateMatrix {
    pub fn empty(slot: u32, step: u64) -> Self {
        Self { rows: Vec::new(), frames: Vec::new(), slot, step }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn budget(&self) -> Option<f64> {
        self.rows.first().map(|r| r[F_BUDGET])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvAction {
    Row(usize),
    /// Placeholder action for an empty frame set.
    Default,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TransitionType {
    Success = 1,
    Exhaustion = 2,
    Slot = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: StateMatrix,
    pub reward: f64,
    pub kind: TransitionType,
    pub grant: u32,
    pub dropped: Vec<FrameId>,
}

/// Common surface of environments the trainer can drive.
pub trait Environment {
    fn state(&self) -> StateMatrix;
    fn step(&mut self, action: EnvAction) -> Result<StepResult, EnvError>;
    fn is_done(&self) -> bool;
}

pub fn legal_actions(state: &StateMatrix) -> Vec<EnvAction> {
    if state.is_empty() {
        vec![EnvAction::Default]
    } else {
        (0..state.len()).map(EnvAction::Row).collect()
    }
}

/// Undiscounted return of a finished episode.
pub fn episode_reward_total(trace: &[StepResult]) -> f64 {
    trace.iter().map(|s| s.reward).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct StepTraceRow {
    pub step: u64,
    pub slot: u32,
    #[serde(rename = "type")]
    pub kind: u8,
    pub action_n: Option<usize>,
    pub action_k: Option<u32>,
    pub grant: u32,
    pub reward: f64,
}

/// Writes `step,slot,type,action_n,action_k,grant,reward` rows.
pub fn write_step_trace<W: std::io::Write>(rows: &[StepTraceRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct XrEnv {
    sim: Simulator,
    step: u64,
    trace: Option<Vec<StepTraceRow>>,
}

impl XrEnv {
    pub fn new(spec: Arc<EpisodeSpec>) -> Self {
        Self { sim: Simulator::new(spec), step: 0, trace: None }
    }

    /// Starts recording a per-step trace.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> Option<&[StepTraceRow]> {
        self.trace.as_deref()
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn metrics(&self) -> &EpisodeMetrics {
        self.sim.metrics()
    }

    fn record(&mut self, slot: u32, kind: TransitionType, frame: Option<FrameId>, grant: u32, reward: f64) {
        if let Some(t) = self.trace.as_mut() {
            t.push(StepTraceRow {
                step: self.step,
                slot,
                kind: kind as u8,
                action_n: frame.map(|f| f.device),
                action_k: frame.map(|f| f.k),
                grant,
                reward,
            });
        }
    }
}

/// Starts an episode and returns its initial state.
pub fn reset(spec: Arc<EpisodeSpec>) -> (XrEnv, StateMatrix) {
    let env = XrEnv::new(spec);
    let s = env.state();
    (env, s)
}

impl Environment for XrEnv {
    fn state(&self) -> StateMatrix {
        if self.sim.is_finished() {
            return StateMatrix::empty(self.sim.slot(), self.step);
        }
        let rates = self.sim.rates();
        let budget = f64::from(self.sim.budget());
        let queue = self.sim.queue();
        StateMatrix {
            rows: queue
                .iter()
                .map(|e| [e.frame.weight, e.remaining_bits, f64::from(e.rfdb), rates[e.frame.device], budget])
                .collect(),
            frames: queue.iter().map(|e| e.frame.id()).collect(),
            slot: self.sim.slot(),
            step: self.step,
        }
    }

    fn step(&mut self, action: EnvAction) -> Result<StepResult, EnvError> {
        if self.sim.is_finished() {
            return Err(EnvError::Finished);
        }
        let rows = self.sim.queue().len();
        let slot = self.sim.slot();
        let chosen = match action {
            EnvAction::Default if rows > 0 => return Err(EnvError::DefaultOnNonEmpty),
            EnvAction::Row(_) if rows == 0 => return Err(EnvError::RowOnEmpty),
            EnvAction::Row(row) if row >= rows => return Err(EnvError::IllegalRow { row, rows }),
            EnvAction::Row(row) => Some(row),
            EnvAction::Default => None,
        };
        let frame = chosen.map(|r| self.sim.queue()[r].frame.id());

        let (kind, grant, dropped) = match chosen {
            Some(row) if self.sim.budget() > 0 => {
                let e = self.sim.queue()[row];
                let need = rbs_to_finish(e.remaining_bits, self.sim.rates()[e.frame.device]);
                let out = self.sim.serve(row, need)?;
                let kind = if out.completed { TransitionType::Success } else { TransitionType::Exhaustion };
                (kind, out.granted, Vec::new())
            }
            _ => {
                let dropped = self.sim.end_slot()?;
                (TransitionType::Slot, 0, dropped)
            }
        };
        let reward = 0.0 - dropped.iter().map(|f| f.weight).sum::<f64>();
        self.record(slot, kind, frame, grant, reward);
        self.step += 1;
        Ok(StepResult {
            next_state: self.state(),
            reward,
            kind,
            grant,
            dropped: dropped.iter().map(|f| f.id()).collect(),
        })
    }

    fn is_done(&self) -> bool {
        self.sim.is_finished()
    }
}

/// Action a fixed priority policy takes: its top-ranked frame.
pub fn policy_action(env: &XrEnv, policy: &mut dyn PriorityPolicy) -> Result<EnvAction, EnvError> {
    let queue = env.sim.queue();
    if queue.is_empty() {
        return Ok(EnvAction::Default);
    }
    let prio = policy.priorities(&env.sim.policy_input()).map_err(|e| EnvError::Policy(e.to_string()))?;
    let order = priority_order(queue, &prio)?;
    Ok(EnvAction::Row(order[0]))
}

/// Plays a whole episode with a priority policy, one decision step at a time.
pub fn run_policy(env: &mut XrEnv, policy: &mut dyn PriorityPolicy) -> Result<Vec<StepResult>, EnvError> {
    let mut trace = Vec::new();
    while !env.is_done() {
        let a = policy_action(env, policy)?;
        trace.push(env.step(a)?);
    }
    Ok(trace)
}
