#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xrsched::neuralnet::QNetwork;
use xrsched::rlenv::{EnvAction, EnvError, Environment, StateMatrix, StepResult, TransitionType, XrEnv, FEATURES};
use xrsched::schedulers::TinyInstance;
use xrsched::simcore::{EpisodeSpec, FrameId, HistoryConfig, QueueEntry};
use xrsched::traffic::{FrameKind, FrameRecord};
use xrsched::trainer::{Agent, TrainConfig};

pub fn frame(device: usize, k: u32, arrival: u32, bits: f64, kind: FrameKind) -> FrameRecord {
    let weight = if kind == FrameKind::I { 1.0 } else { 0.1 };
    FrameRecord { device, k, arrival_slot: arrival, bits, kind, weight }
}

/// Random waiting set with per-device rates.
pub fn random_queue(rng: &mut ChaCha8Rng, max_frames: usize) -> (Vec<QueueEntry>, Vec<f64>) {
    let devices = rng.random_range(1..=4usize);
    let n = rng.random_range(0..=max_frames);
    let rates: Vec<f64> = (0..devices)
        .map(|_| if rng.random_bool(0.1) { rng.random_range(1..50) as f64 } else { rng.random_range(10.0..5000.0) })
        .collect();
    let mut next_k = vec![1u32; devices];
    let queue = (0..n)
        .map(|index| {
            let device = rng.random_range(0..devices);
            let k = next_k[device];
            next_k[device] += 1;
            let kind = if rng.random_bool(0.3) { FrameKind::I } else { FrameKind::P };
            let bits = if rng.random_bool(0.1) {
                rates[device] * rng.random_range(1..6) as f64
            } else {
                rng.random_range(1.0..40_000.0)
            };
            let mut f = frame(device, k, rng.random_range(0..10), bits, kind);
            f.arrival_slot = f.arrival_slot.max(k - 1);
            let mut e = QueueEntry::new(index, f, rng.random_range(1..=20));
            e.remaining_bits = if rng.random_bool(0.5) { bits } else { bits * rng.random_range(0.01..1.0) };
            e
        })
        .collect();
    (queue, rates)
}

/// Random priorities with deliberate ties.
pub fn random_priorities(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random_bool(0.3) { rng.random_range(0..3) as f64 } else { rng.random_range(-5.0..5.0) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Whole remainder fits in what is left.
    Full,
    /// Budget runs out inside this frame.
    Partial,
    /// Nothing left.
    Zero,
}

/// Closed-form allocation: in priority order, frame `j` gets
/// `clamp(N - sum of full needs ranked before j, 0, need_j)`.
pub fn transcribed_allocation(queue: &[QueueEntry], prio: &[f64], n_rb: u32, rates: &[f64]) -> Vec<(u32, Branch)> {
    let mut order: Vec<usize> = (0..queue.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (&queue[a].frame, &queue[b].frame);
        prio[b]
            .partial_cmp(&prio[a])
            .unwrap()
            .then(fa.arrival_slot.cmp(&fb.arrival_slot))
            .then(fa.device.cmp(&fb.device))
            .then(fa.k.cmp(&fb.k))
    });
    let need = |e: &QueueEntry| -> u64 {
        let c = rates[e.frame.device];
        let mut n = (e.remaining_bits / c).ceil() as u64;
        while (n as f64) * c < e.remaining_bits {
            n += 1;
        }
        n
    };
    let mut out = vec![(0, Branch::Zero); queue.len()];
    let mut ahead: u64 = 0;
    for &j in &order {
        let nj = need(&queue[j]);
        let room = u64::from(n_rb).saturating_sub(ahead);
        out[j] = if room == 0 {
            (0, Branch::Zero)
        } else if nj <= room {
            (nj as u32, Branch::Full)
        } else {
            (room as u32, Branch::Partial)
        };
        ahead += nj;
    }
    out
}

/// Random instance within the oracle's enumeration bounds.
pub fn tiny_instance(rng: &mut ChaCha8Rng) -> TinyInstance {
    let devices = rng.random_range(1..=3usize);
    let slots = rng.random_range(2..=6usize);
    let rb_per_slot = rng.random_range(1..=6u32);
    let fdb_slots = rng.random_range(1..=3u32);
    let mut frames = Vec::new();
    for n in 0..devices {
        let count = rng.random_range(1..=2u32);
        let mut arrivals: Vec<u32> = (0..count).map(|_| rng.random_range(0..slots as u32)).collect();
        arrivals.sort();
        for (i, a) in arrivals.into_iter().enumerate() {
            let kind = if rng.random_bool(0.4) { FrameKind::I } else { FrameKind::P };
            frames.push(frame(n, i as u32 + 1, a, rng.random_range(50.0..1500.0), kind));
        }
    }
    let rates = (0..slots).map(|_| (0..devices).map(|_| rng.random_range(50.0..400.0)).collect()).collect();
    TinyInstance { devices, frames, rates, rb_per_slot, fdb_slots }
}

/// Two devices, an I-frame and a P-frame of 600 bits arriving together, 100
/// bits per RB, 4 RBs per slot and a 2-slot budget: only one frame can finish,
/// so the best quality is -0.1 (serve the I-frame).
pub fn hand_instance() -> TinyInstance {
    TinyInstance {
        devices: 2,
        frames: vec![frame(0, 1, 0, 600.0, FrameKind::P), frame(1, 1, 0, 600.0, FrameKind::I)],
        rates: vec![vec![100.0, 100.0]; 3],
        rb_per_slot: 4,
        fdb_slots: 2,
    }
}

pub fn tiny_scale(inst: &TinyInstance) -> [f64; FEATURES] {
    let mean_bits = inst.frames.iter().map(|f| f.bits).sum::<f64>() / inst.frames.len().max(1) as f64;
    let max_rate = inst.rates.iter().flatten().fold(1.0f64, |a, &b| a.max(b));
    [1.0, mean_bits, f64::from(inst.fdb_slots), max_rate, f64::from(inst.rb_per_slot)]
}

pub fn tiny_train_config(episodes: usize) -> TrainConfig {
    TrainConfig {
        gamma: 0.95,
        eps_start: 1.0,
        eps_min: 0.05,
        eps_decay: 0.99,
        replay_capacity: 10_000,
        batch_size: 16,
        sync_period: 50,
        learning_rate: 1e-3,
        warmup: 64,
        episodes,
        train_every: 1,
        device_set: vec![2],
        hidden: 16,
        max_loss: 1e6,
    }
}

/// Trains on one fixed episode and returns the agent.
pub fn train_on_instance(inst: &TinyInstance, episodes: usize, seed: u64) -> Agent {
    let spec = Arc::new(inst.to_spec().unwrap());
    let cfg = tiny_train_config(episodes);
    let mut agent = Agent::new(cfg.clone(), tiny_scale(inst), seed).unwrap();
    for e in 0..episodes {
        agent.run_episode(&mut XrEnv::new(spec.clone()), cfg.epsilon(e), true).unwrap();
    }
    agent
}

pub fn greedy_quality(net: &QNetwork, spec: Arc<EpisodeSpec>) -> f64 {
    xrsched::trainer::greedy_episode(net, spec).unwrap().total_quality()
}

/// Deterministic two-state, two-action MDP. Each state is shown as a 2-row
/// matrix with one row per action; rows are `[state, action, 1, 0, 0]`.
///
/// | state | action | reward | next |
/// |-------|--------|--------|------|
/// | s0    | a0     | 0      | s1   |
/// | s0    | a1     | -1     | s0   |
/// | s1    | a0     | -2     | s0   |
/// | s1    | a1     | -0.5   | s1   |
#[derive(Debug, Clone)]
pub struct ToyMdp {
    pub state: usize,
    pub steps: u64,
    pub horizon: u64,
}

pub const TOY_GAMMA: f64 = 0.9;

impl ToyMdp {
    pub fn new(start: usize, horizon: u64) -> Self {
        Self { state: start, steps: 0, horizon }
    }

    pub fn matrix(state: usize, step: u64) -> StateMatrix {
        StateMatrix {
            rows: (0..2).map(|a| [state as f64, a as f64, 1.0, 0.0, 0.0]).collect(),
            frames: (0..2).map(|a| FrameId { device: a, k: 1 }).collect(),
            slot: step as u32,
            step,
        }
    }

    pub fn transition(state: usize, action: usize) -> (f64, usize) {
        match (state, action) {
            (0, 0) => (0.0, 1),
            (0, _) => (-1.0, 0),
            (_, 0) => (-2.0, 0),
            _ => (-0.5, 1),
        }
    }

    /// Q* by solving the Bellman optimality equations in closed form:
    /// V(s1) = max(-0.5 / (1 - γ), -2 + γ V(s0)), V(s0) = max(γ V(s1), -1 / (1 - γ)).
    /// With γ = 0.9 staying in s1 is optimal: V(s1) = -5, V(s0) = -4.5.
    pub fn q_star(gamma: f64) -> [[f64; 2]; 2] {
        let v1 = -0.5 / (1.0 - gamma);
        let v0 = gamma * v1;
        [[gamma * v1, -1.0 + gamma * v0], [-2.0 + gamma * v0, -0.5 + gamma * v1]]
    }

    /// Q* by value iteration, as a cross-check of the closed form.
    pub fn q_value_iteration(gamma: f64, iters: usize) -> [[f64; 2]; 2] {
        let mut q = [[0.0f64; 2]; 2];
        for _ in 0..iters {
            let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
            q = std::array::from_fn(|s| {
                std::array::from_fn(|a| {
                    let (r, s2) = Self::transition(s, a);
                    r + gamma * v[s2]
                })
            });
        }
        q
    }
}

impl Environment for ToyMdp {
    fn state(&self) -> StateMatrix {
        Self::matrix(self.state, self.steps)
    }

    fn step(&mut self, action: EnvAction) -> Result<StepResult, EnvError> {
        if self.is_done() {
            return Err(EnvError::Finished);
        }
        let a = match action {
            EnvAction::Row(a) if a < 2 => a,
            EnvAction::Row(row) => return Err(EnvError::IllegalRow { row, rows: 2 }),
            EnvAction::Default => return Err(EnvError::DefaultOnNonEmpty),
        };
        let (reward, next) = Self::transition(self.state, a);
        self.state = next;
        self.steps += 1;
        Ok(StepResult { next_state: self.state(), reward, kind: TransitionType::Slot, grant: 0, dropped: Vec::new() })
    }

    fn is_done(&self) -> bool {
        self.steps >= self.horizon
    }
}

pub fn toy_train_config() -> TrainConfig {
    TrainConfig {
        gamma: TOY_GAMMA,
        eps_start: 1.0,
        eps_min: 1.0,
        eps_decay: 1.0,
        replay_capacity: 5_000,
        batch_size: 32,
        sync_period: 100,
        learning_rate: 1e-3,
        warmup: 200,
        episodes: 150,
        train_every: 1,
        device_set: vec![1],
        hidden: 16,
        max_loss: 1e6,
    }
}

/// Trains on the toy MDP with uniform exploration and returns the learned Q table.
pub fn train_toy(seed: u64) -> [[f64; 2]; 2] {
    let cfg = toy_train_config();
    let mut agent = Agent::new(cfg.clone(), [1.0; FEATURES], seed).unwrap();
    let mut starts = ChaCha8Rng::seed_from_u64(seed);
    for e in 0..cfg.episodes {
        let mut env = ToyMdp::new(starts.random_range(0..2), 40);
        agent.run_episode(&mut env, cfg.epsilon(e), true).unwrap();
    }
    let q = |s: usize| agent.online.forward_state(&ToyMdp::matrix(s, 0)).unwrap().q;
    let (q0, q1) = (q(0), q(1));
    [[q0[0], q0[1]], [q1[0], q1[1]]]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spec_of(inst: &TinyInstance) -> Arc<EpisodeSpec> {
    Arc::new(inst.to_spec().unwrap())
}

pub fn history() -> HistoryConfig {
    HistoryConfig::default()
}
