//! Experiment configuration in a flat `section.key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! preset = desk
//! sim.devices = 4
//! train.device_set = 2,4
//! ```
//!
//! A `preset` line (if any) must come first and selects the base values; every
//! other line overrides one field. Unknown keys are rejected. An empty file
//! yields the full preset.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::{dbm_per_hz_to_w, Fading};
use crate::scenario::ScenarioConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("`{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerKind {
    Pf,
    PfI,
    MsDqn,
    Oracle,
}

impl SchedulerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Pf => "pf",
            SchedulerKind::PfI => "pfi",
            SchedulerKind::MsDqn => "msdqn",
            SchedulerKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pf" => Ok(SchedulerKind::Pf),
            "pfi" => Ok(SchedulerKind::PfI),
            "msdqn" => Ok(SchedulerKind::MsDqn),
            "oracle" => Ok(SchedulerKind::Oracle),
            other => Err(format!("unknown scheduler {other:?} (pf|pfi|msdqn|oracle)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Full,
    Desk,
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Preset::Full),
            "desk" => Ok(Preset::Desk),
            other => Err(format!("unknown preset {other:?} (full|desk)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub reps: usize,
    pub seed: u64,
    /// Seed of the fixed scenario used for the learning curve.
    pub test_seed: u64,
    /// Device counts swept by `compare`.
    pub devices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub fdb_ms: f64,
    pub scheduler: SchedulerKind,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Full)
    }
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let full = Self {
            scenario: ScenarioConfig::default(),
            fdb_ms: 10.0,
            scheduler: SchedulerKind::Pf,
            train: TrainConfig { episodes: 100, ..TrainConfig::default() },
            eval: EvalConfig { reps: 50, seed: 1, test_seed: 999_983, devices: vec![2, 4, 6, 8] },
        };
        match preset {
            Preset::Full => full,
            Preset::Desk => Self {
                scenario: ScenarioConfig { devices: 4, rb_per_slot: 12, ..full.scenario },
                train: TrainConfig { episodes: 60, train_every: 2, device_set: vec![2, 4], ..full.train },
                eval: EvalConfig { reps: 10, devices: vec![2, 4], ..full.eval },
                ..full
            },
        }
    }

    pub fn slot_ms(&self) -> f64 {
        self.scenario.traffic.slot_ms
    }

    /// Checks cross-field consistency and derives the delay budget in slots.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let invalid = |key: &str, msg: String| Err(ConfigError::Invalid { key: key.into(), msg });
        let slot_ms = self.slot_ms();
        if !(slot_ms > 0.0) {
            return invalid("sim.slot_ms", "must be positive".into());
        }
        let ratio = self.fdb_ms / slot_ms;
        let rounded = ratio.round();
        if !(rounded >= 1.0) || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
            return invalid("sim.fdb_ms", format!("{} ms is not a whole number of {} ms slots", self.fdb_ms, slot_ms));
        }
        self.scenario.fdb_slots = rounded as u32;
        self.scenario.channel.slot_s = slot_ms * 1e-3;
        if self.scenario.devices == 0 {
            return invalid("sim.devices", "need at least one device".into());
        }
        if self.scenario.slots == 0 || self.scenario.rb_per_slot == 0 {
            return invalid("sim.slots", "slots and rb_per_slot must be positive".into());
        }
        if !(self.scenario.history.beta > 0.0 && self.scenario.history.beta < 1.0) {
            return invalid("sim.history_beta", "must lie in (0, 1)".into());
        }
        if !(self.scenario.history.floor > 0.0) {
            return invalid("sim.history_floor", "must be positive".into());
        }
        if self.eval.reps == 0 || self.eval.devices.is_empty() || self.eval.devices.contains(&0) {
            return invalid("eval", "reps and device counts must be positive".into());
        }
        self.scenario.traffic.validate().or_else(|e| invalid("traffic", e.to_string()))?;
        self.train.validate().or_else(|e| invalid("train", e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::preset(Preset::Full);
        let mut seen_setting = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected `key = value`, got {body:?}") })?;
            if key == "preset" {
                if seen_setting {
                    return Err(ConfigError::Syntax { line, msg: "`preset` must precede all other keys".into() });
                }
                let p = value.parse::<Preset>().map_err(|msg| ConfigError::Value { line, key: key.into(), msg })?;
                cfg = Self::preset(p);
                continue;
            }
            seen_setting = true;
            cfg.set(key, value).map_err(|e| match e {
                SetError::Unknown => ConfigError::UnknownKey { line, key: key.into() },
                SetError::Bad(msg) => ConfigError::Value { line, key: key.into(), msg },
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), SetError> {
        match key {
            "traffic.frame_rate" => self.scenario.traffic.frame_rate = num(v)?,
            "traffic.mean_frame_bits" => self.scenario.traffic.mean_frame_bits = num(v)?,
            "traffic.gop_length" => self.scenario.traffic.gop_length = num(v)?,
            "traffic.i_to_p_ratio" => self.scenario.traffic.i_to_p_ratio = num(v)?,
            "traffic.weight_i" => self.scenario.traffic.weight_i = num(v)?,
            "traffic.weight_p" => self.scenario.traffic.weight_p = num(v)?,
            "traffic.jitter_std_ms" => self.scenario.traffic.jitter.std = num(v)?,
            "traffic.jitter_max_ms" => {
                let m: f64 = num(v)?;
                self.scenario.traffic.jitter.lo = -m;
                self.scenario.traffic.jitter.hi = m;
            }
            "traffic.size_std" => self.scenario.traffic.size_factor.std = num(v)?,
            "traffic.size_min" => self.scenario.traffic.size_factor.lo = num(v)?,
            "traffic.size_max" => self.scenario.traffic.size_factor.hi = num(v)?,
            "channel.tx_power_w" => self.scenario.channel.tx_power_w = num(v)?,
            "channel.rb_bandwidth_hz" => self.scenario.channel.rb_bandwidth_hz = num(v)?,
            "channel.noise_dbm_per_hz" => self.scenario.channel.noise_psd_w_per_hz = dbm_per_hz_to_w(num(v)?),
            "channel.carrier_ghz" => self.scenario.channel.carrier_ghz = num(v)?,
            "channel.cell_side_m" => self.scenario.channel.cell_side_m = num(v)?,
            "channel.bs_height_m" => self.scenario.channel.bs_height_m = num(v)?,
            "channel.ue_height_m" => self.scenario.channel.ue_height_m = num(v)?,
            "channel.fading" => {
                self.scenario.channel.fading = match v {
                    "rayleigh" => Fading::BlockRayleigh,
                    "none" => Fading::None,
                    _ => return Err(SetError::Bad("expected rayleigh|none".into())),
                }
            }
            "sim.devices" => self.scenario.devices = num(v)?,
            "sim.slots" => self.scenario.slots = num(v)?,
            "sim.slot_ms" => self.scenario.traffic.slot_ms = num(v)?,
            "sim.fdb_ms" => self.fdb_ms = num(v)?,
            "sim.rb_per_slot" => self.scenario.rb_per_slot = num(v)?,
            "sim.phasing" => self.scenario.phasing = v.parse().map_err(SetError::Bad)?,
            "sim.history_beta" => self.scenario.history.beta = num(v)?,
            "sim.history_floor" => self.scenario.history.floor = num(v)?,
            "scheduler" => self.scheduler = v.parse().map_err(SetError::Bad)?,
            "train.gamma" => self.train.gamma = num(v)?,
            "train.eps_start" => self.train.eps_start = num(v)?,
            "train.eps_min" => self.train.eps_min = num(v)?,
            "train.eps_decay" => self.train.eps_decay = num(v)?,
            "train.replay_capacity" => self.train.replay_capacity = num(v)?,
            "train.batch_size" => self.train.batch_size = num(v)?,
            "train.sync_period" => self.train.sync_period = num(v)?,
            "train.learning_rate" => self.train.learning_rate = num(v)?,
            "train.warmup" => self.train.warmup = num(v)?,
            "train.episodes" => self.train.episodes = num(v)?,
            "train.train_every" => self.train.train_every = num(v)?,
            "train.device_set" => self.train.device_set = list(v)?,
            "train.hidden" => self.train.hidden = num(v)?,
            "train.max_loss" => self.train.max_loss = num(v)?,
            "eval.reps" => self.eval.reps = num(v)?,
            "eval.seed" => self.eval.seed = num(v)?,
            "eval.test_seed" => self.eval.test_seed = num(v)?,
            "eval.devices" => self.eval.devices = list(v)?,
            _ => return Err(SetError::Unknown),
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let t = &self.scenario.traffic;
        let c = &self.scenario.channel;
        let s = &self.scenario;
        let tr = &self.train;
        let join = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let noise_dbm = 10.0 * (c.noise_psd_w_per_hz * 1e3).log10();
        let fading = match c.fading {
            Fading::BlockRayleigh => "rayleigh",
            Fading::None => "none",
        };
        let entries: Vec<(&str, String)> = vec![
            ("traffic.frame_rate", t.frame_rate.to_string()),
            ("traffic.mean_frame_bits", t.mean_frame_bits.to_string()),
            ("traffic.gop_length", t.gop_length.to_string()),
            ("traffic.i_to_p_ratio", t.i_to_p_ratio.to_string()),
            ("traffic.weight_i", t.weight_i.to_string()),
            ("traffic.weight_p", t.weight_p.to_string()),
            ("traffic.jitter_std_ms", t.jitter.std.to_string()),
            ("traffic.jitter_max_ms", t.jitter.hi.to_string()),
            ("traffic.size_std", t.size_factor.std.to_string()),
            ("traffic.size_min", t.size_factor.lo.to_string()),
            ("traffic.size_max", t.size_factor.hi.to_string()),
            ("channel.tx_power_w", c.tx_power_w.to_string()),
            ("channel.rb_bandwidth_hz", c.rb_bandwidth_hz.to_string()),
            ("channel.noise_dbm_per_hz", noise_dbm.to_string()),
            ("channel.carrier_ghz", c.carrier_ghz.to_string()),
            ("channel.cell_side_m", c.cell_side_m.to_string()),
            ("channel.bs_height_m", c.bs_height_m.to_string()),
            ("channel.ue_height_m", c.ue_height_m.to_string()),
            ("channel.fading", fading.to_string()),
            ("sim.devices", s.devices.to_string()),
            ("sim.slots", s.slots.to_string()),
            ("sim.slot_ms", t.slot_ms.to_string()),
            ("sim.fdb_ms", self.fdb_ms.to_string()),
            ("sim.rb_per_slot", s.rb_per_slot.to_string()),
            ("sim.phasing", s.phasing.to_string()),
            ("sim.history_beta", s.history.beta.to_string()),
            ("sim.history_floor", s.history.floor.to_string()),
            ("scheduler", self.scheduler.to_string()),
            ("train.gamma", tr.gamma.to_string()),
            ("train.eps_start", tr.eps_start.to_string()),
            ("train.eps_min", tr.eps_min.to_string()),
            ("train.eps_decay", tr.eps_decay.to_string()),
            ("train.replay_capacity", tr.replay_capacity.to_string()),
            ("train.batch_size", tr.batch_size.to_string()),
            ("train.sync_period", tr.sync_period.to_string()),
            ("train.learning_rate", tr.learning_rate.to_string()),
            ("train.warmup", tr.warmup.to_string()),
            ("train.episodes", tr.episodes.to_string()),
            ("train.train_every", tr.train_every.to_string()),
            ("train.device_set", join(&tr.device_set)),
            ("train.hidden", tr.hidden.to_string()),
            ("train.max_loss", tr.max_loss.to_string()),
            ("eval.reps", self.eval.reps.to_string()),
            ("eval.seed", self.eval.seed.to_string()),
            ("eval.test_seed", self.eval.test_seed.to_string()),
            ("eval.devices", join(&self.eval.devices)),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

enum SetError {
    Unknown,
    Bad(String),
}

fn num<T: FromStr>(v: &str) -> Result<T, SetError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| SetError::Bad(format!("{v:?}: {e}")))
}

fn list(v: &str) -> Result<Vec<usize>, SetError> {
    v.split(',').map(|x| num(x.trim())).collect()
}
