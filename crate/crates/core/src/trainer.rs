//! MS-DQN training: ε-greedy rollouts, a size-bucketed replay buffer, a
//! periodically synchronized target network and greedy evaluation.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::neuralnet::{td_target, Adam, NetError, QNetwork, Sample, DEFAULT_HIDDEN};
use crate::rlenv::{EnvAction, EnvError, Environment, StateMatrix, TransitionType, XrEnv, FEATURES, F_RATE};
use crate::scenario::{build_episode, Phasing, ScenarioConfig};
use crate::seeding;
use crate::simcore::{EpisodeMetrics, SimError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_min: f64,
    pub eps_decay: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Target network refresh period, in train steps.
    pub sync_period: u64,
    pub learning_rate: f64,
    /// Transitions collected before the first update.
    pub warmup: usize,
    pub episodes: usize,
    /// Decision steps between two train steps.
    pub train_every: u64,
    pub device_set: Vec<usize>,
    pub hidden: usize,
    pub max_loss: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            eps_start: 1.0,
            eps_min: 0.05,
            eps_decay: 0.95,
            replay_capacity: 100_000,
            batch_size: 64,
            sync_period: 500,
            learning_rate: 1e-3,
            warmup: 1000,
            episodes: 60,
            train_every: 1,
            device_set: vec![2, 4, 6, 8],
            hidden: DEFAULT_HIDDEN,
            max_loss: 1e6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_min) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if !(self.eps_decay > 0.0 && self.eps_decay <= 1.0) {
            return bad("eps_decay must lie in (0, 1]");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("need 1 <= batch_size <= replay_capacity");
        }
        if self.sync_period == 0 || self.train_every == 0 || self.hidden == 0 {
            return bad("sync_period, train_every and hidden must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.device_set.is_empty() || self.device_set.contains(&0) {
            return bad("device_set must hold positive device counts");
        }
        Ok(())
    }

    /// `max(ε_min, ε₀ · decay^episode)`.
    pub fn epsilon(&self, episode: usize) -> f64 {
        (self.eps_start * self.eps_decay.powi(episode as i32)).max(self.eps_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateMatrix,
    pub action: EnvAction,
    pub reward: f64,
    pub next_state: StateMatrix,
    /// The next frame set is empty, so its value is pinned at zero.
    pub next_is_default: bool,
    pub kind: TransitionType,
}

/// FIFO replay memory whose samples are grouped by state row count.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    buckets: BTreeMap<usize, VecDeque<Transition>>,
    order: VecDeque<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), buckets: BTreeMap::new(), order: VecDeque::new() }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn bucket_sizes(&self) -> Vec<(usize, usize)> {
        self.buckets.iter().map(|(&k, v)| (k, v.len())).collect()
    }

    /// Stores `t`, evicting the oldest transition when full. Transitions from
    /// empty states carry no trainable action and are ignored.
    pub fn push(&mut self, t: Transition) {
        if t.state.is_empty() {
            return;
        }
        if self.order.len() == self.capacity {
            if let Some(old) = self.order.pop_front() {
                let bucket = self.buckets.get_mut(&old).expect("bucket of a stored transition");
                bucket.pop_front();
                if bucket.is_empty() {
                    self.buckets.remove(&old);
                }
            }
        }
        let rows = t.state.len();
        self.order.push_back(rows);
        self.buckets.entry(rows).or_default().push_back(t);
    }

    /// Iterates over all stored transitions, oldest first within each bucket.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buckets.values().flatten()
    }

    /// Draws a transition uniformly, then `batch` distinct transitions from its
    /// row-count bucket. Returns `None` when that bucket is too small.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if self.order.is_empty() {
            return None;
        }
        let rows = self.order[rng.random_range(0..self.order.len())];
        let bucket = &self.buckets[&rows];
        if bucket.len() < batch {
            return None;
        }
        Some(sample_indices(rng, bucket.len(), batch).into_iter().map(|i| &bucket[i]).collect())
    }
}

/// ε-greedy action; empty states always take the default action.
pub fn act<R: Rng + ?Sized>(state: &StateMatrix, net: &QNetwork, eps: f64, rng: &mut R) -> Result<EnvAction, NetError> {
    if state.is_empty() {
        return Ok(EnvAction::Default);
    }
    if eps > 0.0 && rng.random::<f64>() < eps {
        return Ok(EnvAction::Row(rng.random_range(0..state.len())));
    }
    Ok(EnvAction::Row(net.forward_state(state)?.argmax()))
}

/// One Adam update on the squared TD error of `batch`.
pub fn train_step(
    net: &mut QNetwork,
    target: &QNetwork,
    opt: &mut Adam,
    batch: &[&Transition],
    gamma: f64,
) -> Result<f64, NetError> {
    let mut samples = Vec::with_capacity(batch.len());
    for t in batch {
        let action = match t.action {
            EnvAction::Row(r) => r,
            EnvAction::Default => return Err(NetError::BadAction { action: usize::MAX, rows: t.state.len() }),
        };
        let y = td_target(t.reward, &t.next_state, target, gamma)?;
        samples.push(Sample { rows: &t.state.rows, action, target: y });
    }
    net.zero_grad();
    let loss = net.loss_backward(&samples)?;
    opt.step(net);
    Ok(loss)
}

pub fn sync_target(net: &QNetwork, target: &mut QNetwork) {
    target.copy_from(net);
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeStats {
    pub total_reward: f64,
    pub steps: u64,
    pub train_steps: u64,
    pub loss_sum: f64,
}

impl EpisodeStats {
    pub fn loss_mean(&self) -> f64 {
        if self.train_steps == 0 {
            f64::NAN
        } else {
            self.loss_sum / self.train_steps as f64
        }
    }
}

/// Online network, target network, optimizer, replay and exploration RNG.
#[derive(Debug, Clone)]
pub struct Agent {
    pub cfg: TrainConfig,
    pub online: QNetwork,
    pub target: QNetwork,
    pub opt: Adam,
    pub replay: ReplayBuffer,
    pub rng: ChaCha8Rng,
    pub train_steps: u64,
}

impl Agent {
    pub fn new(cfg: TrainConfig, scale: [f64; FEATURES], seed: u64) -> Result<Self, TrainError> {
        cfg.validate()?;
        let mut init = seeding::rng_for(seed, &[seeding::TRAINER, 0]);
        let online = QNetwork::new(cfg.hidden, scale, &mut init);
        Ok(Self {
            target: online.clone(),
            opt: Adam::new(&online, cfg.learning_rate),
            replay: ReplayBuffer::new(cfg.replay_capacity),
            rng: seeding::rng_for(seed, &[seeding::TRAINER, 1]),
            online,
            cfg,
            train_steps: 0,
        })
    }

    /// Sets one input scale entry on both networks.
    pub fn set_scale(&mut self, feature: usize, value: f64) {
        self.online.scale[feature] = value;
        self.target.scale[feature] = value;
    }

    fn learn(&mut self, stats: &mut EpisodeStats) -> Result<(), TrainError> {
        let Some(batch) = self.replay.sample(self.cfg.batch_size, &mut self.rng) else {
            return Ok(());
        };
        let loss = train_step(&mut self.online, &self.target, &mut self.opt, &batch, self.cfg.gamma)?;
        self.train_steps += 1;
        if !loss.is_finite() || loss > self.cfg.max_loss {
            return Err(TrainError::Diverged { step: self.train_steps, loss });
        }
        stats.train_steps += 1;
        stats.loss_sum += loss;
        if self.train_steps.is_multiple_of(self.cfg.sync_period) {
            sync_target(&self.online, &mut self.target);
        }
        Ok(())
    }

    /// Plays `env` to the end with exploration `eps`, storing and learning
    /// from transitions when `learn` is set.
    pub fn run_episode<E: Environment>(
        &mut self,
        env: &mut E,
        eps: f64,
        learn: bool,
    ) -> Result<EpisodeStats, TrainError> {
        let mut stats = EpisodeStats::default();
        let mut state = env.state();
        while !env.is_done() {
            let action = act(&state, &self.online, eps, &mut self.rng)?;
            let res = env.step(action)?;
            stats.total_reward += res.reward;
            stats.steps += 1;
            if learn {
                self.replay.push(Transition {
                    state,
                    action,
                    reward: res.reward,
                    next_is_default: res.next_state.is_empty(),
                    next_state: res.next_state.clone(),
                    kind: res.kind,
                });
                if self.replay.len() >= self.cfg.warmup && stats.steps % self.cfg.train_every == 0 {
                    self.learn(&mut stats)?;
                }
            }
            state = res.next_state;
        }
        Ok(stats)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub episode: usize,
    pub epsilon: f64,
    pub train_return: f64,
    pub test_return: f64,
    pub loss_mean: f64,
}

/// Writes `episode,epsilon,train_return,test_return,loss_mean` rows.
pub fn write_learning_curve<W: std::io::Write>(rows: &[CurveRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Network after the last episode.
    pub net: QNetwork,
    /// Network with the highest test return, earliest on ties.
    pub best_net: QNetwork,
    pub best_episode: usize,
    pub curve: Vec<CurveRow>,
}

/// Input scale for XR states: bits in units of the mean frame, time in units
/// of the delay budget, RBs in units of the slot budget.
pub fn xr_scale(scenario: &ScenarioConfig, rate_max: f64) -> [f64; FEATURES] {
    [
        1.0,
        scenario.traffic.mean_frame_bits,
        f64::from(scenario.fdb_slots),
        rate_max.max(1.0),
        f64::from(scenario.rb_per_slot),
    ]
}

fn max_rate(spec: &crate::simcore::EpisodeSpec) -> f64 {
    spec.rates.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
}

/// Trains on episodes with a random device count from the curriculum and
/// random phasing, testing greedily after each episode on `scenario` with
/// `test_seed`.
pub fn train(
    cfg: &TrainConfig,
    scenario: &ScenarioConfig,
    seed: u64,
    test_seed: u64,
) -> Result<TrainOutcome, TrainError> {
    let test_spec = Arc::new(build_episode(scenario, test_seed)?);
    let mut agent = Agent::new(cfg.clone(), xr_scale(scenario, max_rate(&test_spec)), seed)?;
    let mut curriculum = seeding::rng_for(seed, &[seeding::TRAINER, 2]);
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut best: Option<(usize, f64, QNetwork)> = None;
    for episode in 0..cfg.episodes {
        let devices = cfg.device_set[curriculum.random_range(0..cfg.device_set.len())];
        let ep_cfg = ScenarioConfig { devices, phasing: Phasing::Random, ..scenario.clone() };
        let spec = build_episode(&ep_cfg, seeding::derive(seed, &[seeding::TRAINER, 3, episode as u64]))?;
        let rate = max_rate(&spec).max(agent.online.scale[F_RATE]);
        agent.set_scale(F_RATE, rate);
        let eps = cfg.epsilon(episode);
        let stats = agent.run_episode(&mut XrEnv::new(Arc::new(spec)), eps, true)?;
        let test = agent.run_episode(&mut XrEnv::new(test_spec.clone()), 0.0, false)?;
        curve.push(CurveRow {
            episode,
            epsilon: eps,
            train_return: stats.total_reward,
            test_return: test.total_reward,
            loss_mean: stats.loss_mean(),
        });
        if best.as_ref().is_none_or(|b| test.total_reward > b.1) {
            best = Some((episode, test.total_reward, agent.online.clone()));
        }
    }
    let (best_episode, _, best_net) = best.unwrap_or_else(|| (0, f64::NAN, agent.online.clone()));
    Ok(TrainOutcome { net: agent.online, best_net, best_episode, curve })
}

/// Greedy rollout of `net` over one episode.
pub fn greedy_episode(net: &QNetwork, spec: Arc<crate::simcore::EpisodeSpec>) -> Result<EpisodeMetrics, TrainError> {
    let mut env = XrEnv::new(spec);
    let mut state = env.state();
    while !env.is_done() {
        let action =
            if state.is_empty() { EnvAction::Default } else { EnvAction::Row(net.forward_state(&state)?.argmax()) };
        state = env.step(action)?.next_state;
    }
    Ok(env.metrics().clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample mean and (n − 1) standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std =
            if n > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub quality: MeanStd,
    pub i_rate: MeanStd,
    pub p_rate: MeanStd,
    pub runs: Vec<EpisodeMetrics>,
}

/// Greedy evaluation over the given episode seeds.
pub fn evaluate(net: &QNetwork, scenario: &ScenarioConfig, seeds: &[u64]) -> Result<EvalSummary, TrainError> {
    let runs = seeds
        .iter()
        .map(|&s| greedy_episode(net, Arc::new(build_episode(scenario, s)?)))
        .collect::<Result<Vec<_>, _>>()?;
    let pick = |f: fn(&EpisodeMetrics) -> f64| MeanStd::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(EvalSummary {
        quality: pick(EpisodeMetrics::total_quality),
        i_rate: pick(EpisodeMetrics::i_rate),
        p_rate: pick(EpisodeMetrics::p_rate),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn state(n: usize) -> StateMatrix {
        StateMatrix {
            rows: (0..n).map(|i| [1.0, i as f64, 3.0, 2.0, 5.0]).collect(),
            frames: (0..n).map(|i| crate::simcore::FrameId { device: i, k: 1 }).collect(),
            slot: 0,
            step: 0,
        }
    }

    fn transition(n: usize, reward: f64) -> Transition {
        Transition {
            state: state(n),
            action: EnvAction::Row(0),
            reward,
            next_state: StateMatrix::empty(1, 1),
            next_is_default: true,
            kind: TransitionType::Slot,
        }
    }

    #[test]
    fn epsilon_schedule_is_exact() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.epsilon(0), 1.0);
        assert_eq!(cfg.epsilon(1), 0.95);
        assert_eq!(cfg.epsilon(10), 0.95f64.powi(10));
        assert_eq!(cfg.epsilon(200), 0.05);
    }

    #[test]
    fn empty_state_takes_default() {
        let net = QNetwork::new(4, [1.0; FEATURES], &mut ChaCha8Rng::seed_from_u64(0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for eps in [0.0, 0.5, 1.0] {
            assert_eq!(act(&StateMatrix::empty(0, 0), &net, eps, &mut rng).unwrap(), EnvAction::Default);
        }
    }

    #[test]
    fn replay_evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(3);
        for (i, n) in [1usize, 2, 1, 2].into_iter().enumerate() {
            buf.push(transition(n, -(i as f64)));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![-2.0, -1.0, -3.0]);
        buf.push(transition(0, 9.0));
        assert_eq!(buf.len(), 3);
    }

    #[test]
    fn batches_share_row_count() {
        let mut buf = ReplayBuffer::new(100);
        for i in 0..60 {
            buf.push(transition(1 + i % 3, 0.0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(buf.sample(21, &mut rng).is_none());
        let b = buf.sample(20, &mut rng).unwrap();
        assert!(b.iter().all(|t| t.state.len() == b[0].state.len()));
    }

    #[test]
    fn default_next_state_target_is_reward() {
        let mut net = QNetwork::new(4, [1.0; FEATURES], &mut ChaCha8Rng::seed_from_u64(2));
        let target = net.clone();
        let mut opt = Adam::new(&net, 1e-2);
        let t = transition(2, -1.1);
        let q0 = net.forward_state(&t.state).unwrap().q[0];
        let loss = train_step(&mut net, &target, &mut opt, &[&t], 0.95).unwrap();
        assert!((loss - (q0 + 1.1).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn zero_error_batch_leaves_params() {
        let mut net = QNetwork::new(4, [1.0; FEATURES], &mut ChaCha8Rng::seed_from_u64(3));
        let target = net.clone();
        let mut t = transition(3, 0.0);
        t.reward = net.forward_state(&t.state).unwrap().q[0];
        let before = net.clone();
        let mut opt = Adam::new(&net, 1e-2);
        let loss = train_step(&mut net, &target, &mut opt, &[&t], 0.95).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
    }

    #[test]
    fn gradient_descent_on_one_transition_is_monotone() {
        let mut net = QNetwork::new(8, [1.0; FEATURES], &mut ChaCha8Rng::seed_from_u64(4));
        let t = transition(4, -2.0);
        let mut last = f64::INFINITY;
        for _ in 0..300 {
            net.zero_grad();
            let s = Sample { rows: &t.state.rows, action: 0, target: t.reward };
            let loss = net.loss_backward(&[s]).unwrap();
            assert!(loss <= last + 1e-12, "{loss} > {last}");
            last = loss;
            for p in net.params_mut() {
                for (v, g) in p.value.data.iter_mut().zip(&p.grad.data) {
                    *v -= 0.01 * g;
                }
            }
        }
        assert!(last < 1e-3, "{last}");
    }

    #[test]
    fn adam_reaches_a_fixed_target() {
        let mut net = QNetwork::new(8, [1.0; FEATURES], &mut ChaCha8Rng::seed_from_u64(4));
        let target = net.clone();
        let mut opt = Adam::new(&net, 1e-3);
        let t = transition(4, -2.0);
        let mut loss = f64::INFINITY;
        for _ in 0..500 {
            loss = train_step(&mut net, &target, &mut opt, &[&t], 0.95).unwrap();
        }
        assert!(loss < 1e-3, "{loss}");
    }

    #[test]
    fn bad_config_is_rejected() {
        for cfg in [
            TrainConfig { gamma: 1.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { device_set: vec![], ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
