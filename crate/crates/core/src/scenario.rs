//! Turns a scenario description and a seed into a concrete [`EpisodeSpec`].
//!
//! Every random ingredient (device positions, per-device traffic, fading,
//! initial phases) draws from its own stream derived from the episode seed, so
//! two runs with equal seeds see identical traffic and channels whatever
//! scheduler drives them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::channel::{sample_positions, sample_slot_gains, ChannelConfig, Position};
use crate::seeding;
use crate::simcore::{EpisodeSpec, HistoryConfig, SimError};
use crate::traffic::{generate_frames_with, TrafficConfig};

/// Placement of the first frame of each device within one frame period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phasing {
    /// Uniform in `[0, 1000 / f)` ms, drawn per device.
    Random,
    /// All devices start at slot 0.
    Simultaneous,
    /// Device `n` starts at `n * (1000 / f) / N` ms.
    Equal,
}

impl Phasing {
    pub const ALL: [Phasing; 3] = [Phasing::Random, Phasing::Simultaneous, Phasing::Equal];

    pub fn as_str(self) -> &'static str {
        match self {
            Phasing::Random => "random",
            Phasing::Simultaneous => "simultaneous",
            Phasing::Equal => "equal",
        }
    }
}

impl fmt::Display for Phasing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phasing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Phasing::Random),
            "simultaneous" => Ok(Phasing::Simultaneous),
            "equal" => Ok(Phasing::Equal),
            other => Err(format!("unknown phasing {other:?} (random|simultaneous|equal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub traffic: TrafficConfig,
    pub channel: ChannelConfig,
    pub devices: usize,
    pub slots: u32,
    pub fdb_slots: u32,
    pub rb_per_slot: u32,
    pub phasing: Phasing,
    pub history: HistoryConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            traffic: TrafficConfig::default(),
            channel: ChannelConfig::default(),
            devices: 8,
            slots: 2000,
            fdb_slots: 20,
            rb_per_slot: 133,
            phasing: Phasing::Random,
            history: HistoryConfig::default(),
        }
    }
}

/// First-frame slot of every device.
pub fn initial_arrivals(cfg: &ScenarioConfig, seed: u64) -> Vec<u32> {
    let period_ms = 1000.0 / cfg.traffic.frame_rate;
    let to_slot = |ms: f64| (ms / cfg.traffic.slot_ms + 1e-9).floor() as u32;
    let n = cfg.devices;
    match cfg.phasing {
        Phasing::Simultaneous => vec![0; n],
        Phasing::Equal => (0..n).map(|i| to_slot(i as f64 * period_ms / n as f64)).collect(),
        Phasing::Random => {
            let mut rng = seeding::rng_for(seed, &[seeding::PHASING]);
            (0..n).map(|_| to_slot(rng.random::<f64>() * period_ms)).collect()
        }
    }
}

pub fn device_positions(cfg: &ScenarioConfig, seed: u64) -> Vec<Position> {
    let mut rng = seeding::rng_for(seed, &[seeding::POSITIONS]);
    sample_positions(&cfg.channel, cfg.devices, &mut rng)
}

/// Builds the full episode for `seed`.
pub fn build_episode(cfg: &ScenarioConfig, seed: u64) -> Result<EpisodeSpec, SimError> {
    let positions = device_positions(cfg, seed);
    let starts = initial_arrivals(cfg, seed);
    let mut frames = Vec::new();
    for (n, &t0) in starts.iter().enumerate() {
        let traffic = TrafficConfig { initial_arrival_slot: t0, ..cfg.traffic.clone() };
        let mut rng = seeding::rng_for(seed, &[seeding::TRAFFIC, n as u64]);
        frames.extend(generate_frames_with(&traffic, n, cfg.slots, &mut rng));
    }
    let channel_seed = seeding::derive(seed, &[seeding::CHANNEL]);
    let (gains, rates) = (0..cfg.slots)
        .map(|t| {
            let st = sample_slot_gains(&cfg.channel, &positions, t, channel_seed);
            (st.gain, st.bits_per_rb)
        })
        .unzip();
    EpisodeSpec::new(cfg.devices, frames, gains, rates, cfg.rb_per_slot, cfg.fdb_slots, cfg.history)
}
