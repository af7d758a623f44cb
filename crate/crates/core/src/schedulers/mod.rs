//! Frame-priority policies.
//!
//! A policy maps the waiting frames of one slot to real priorities; the
//! simulator then allocates RBs greedily in decreasing priority order.

mod oracle;

pub use oracle::{oracle_best_quality, replay_schedule, OracleError, OracleResult, Schedule, TinyInstance};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::seeding;
use crate::simcore::FrameId;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("frame {0:?} has no remaining bits but is still queued")]
    FinishedFrameQueued(FrameId),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameView {
    pub id: FrameId,
    pub arrival_slot: u32,
    pub size_bits: f64,
    pub remaining_bits: f64,
    pub rfdb: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceView {
    pub gain: f64,
    pub bits_per_rb: f64,
    /// Exponentially averaged served bits per slot.
    pub avg_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyInput {
    pub slot: u32,
    pub frames: Vec<FrameView>,
    pub devices: Vec<DeviceView>,
    pub rb_budget: u32,
}

pub trait PriorityPolicy {
    fn name(&self) -> &str;

    /// One priority per entry of `input.frames`, in the same order.
    fn priorities(&mut self, input: &PolicyInput) -> Result<Vec<f64>, PolicyError>;
}

/// Exponential moving average of served bits per slot, floored away from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateHistory {
    value: f64,
    beta: f64,
    floor: f64,
}

impl RateHistory {
    pub fn new(initial: f64, beta: f64, floor: f64) -> Self {
        assert!(beta > 0.0 && beta <= 1.0, "ema coefficient must lie in (0, 1]");
        assert!(floor > 0.0, "rate floor must be positive");
        Self { value: initial.max(floor), beta, floor }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn updated(self, served_bits: f64) -> Self {
        let value = ((1.0 - self.beta) * self.value + self.beta * served_bits).max(self.floor);
        Self { value, ..self }
    }
}

pub fn update_history(history: RateHistory, served_bits: f64) -> RateHistory {
    history.updated(served_bits)
}

fn pf_metric(input: &PolicyInput, f: &FrameView) -> f64 {
    let d = &input.devices[f.id.device];
    d.bits_per_rb / d.avg_rate
}

/// Proportional fair: every frame of device `n` gets `c_n / R_n`.
pub fn pf_priority(input: &PolicyInput) -> Vec<f64> {
    input.frames.iter().map(|f| pf_metric(input, f)).collect()
}

/// PF boosted by `size / remaining`, favouring frames already in flight.
pub fn pfi_priority(input: &PolicyInput) -> Result<Vec<f64>, PolicyError> {
    input
        .frames
        .iter()
        .map(|f| {
            if f.remaining_bits <= 0.0 {
                return Err(PolicyError::FinishedFrameQueued(f.id));
            }
            Ok(pf_metric(input, f) * (f.size_bits / f.remaining_bits))
        })
        .collect()
}

#[derive(Debug, Default, Clone)]
pub struct Pf;

impl PriorityPolicy for Pf {
    fn name(&self) -> &str {
        "pf"
    }
    fn priorities(&mut self, input: &PolicyInput) -> Result<Vec<f64>, PolicyError> {
        Ok(pf_priority(input))
    }
}

#[derive(Debug, Default, Clone)]
pub struct PfI;

impl PriorityPolicy for PfI {
    fn name(&self) -> &str {
        "pfi"
    }
    fn priorities(&mut self, input: &PolicyInput) -> Result<Vec<f64>, PolicyError> {
        pfi_priority(input)
    }
}

/// Equal priorities everywhere, so the tie-break alone decides: oldest frame first.
#[derive(Debug, Default, Clone)]
pub struct FixedOrder;

impl PriorityPolicy for FixedOrder {
    fn name(&self) -> &str {
        "fifo"
    }
    fn priorities(&mut self, input: &PolicyInput) -> Result<Vec<f64>, PolicyError> {
        Ok(vec![0.0; input.frames.len()])
    }
}

/// Uniform random priorities; a weak reference point for tests.
#[derive(Debug, Clone)]
pub struct RandomPriority {
    rng: ChaCha8Rng,
}

impl RandomPriority {
    pub fn new(seed: u64) -> Self {
        Self { rng: seeding::rng_for(seed, &[]) }
    }
}

impl PriorityPolicy for RandomPriority {
    fn name(&self) -> &str {
        "random"
    }
    fn priorities(&mut self, input: &PolicyInput) -> Result<Vec<f64>, PolicyError> {
        Ok(input.frames.iter().map(|_| self.rng.random::<f64>()).collect())
    }
}
