//! XR video traffic: GOP-structured frame sequences with arrival jitter.
//!
//! Each device emits frames at a fixed frame rate. Frame `k` (1-based) reaches
//! the base station at slot
//!
//! ```text
//! t_k = t_0 + floor(((k - 1) / f + jitter) / slot_length)
//! ```
//!
//! and every `gop_length`-th frame, starting with the first, is an I-frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

/// Guard against `x.99999999` artifacts when flooring slot offsets.
const FLOOR_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TrafficError {
    #[error("frame index must be >= 1, got {0}")]
    ZeroFrameIndex(u32),
    #[error("jitter {jitter} ms outside truncation bounds [{lo}, {hi}] ms")]
    JitterOutOfBounds { jitter: f64, lo: f64, hi: f64 },
    #[error("invalid traffic config: {0}")]
    Invalid(String),
}

/// Gaussian truncated to `[lo, hi]`, sampled by rejection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGaussian {
    pub mean: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedGaussian {
    pub fn new(mean: f64, std: f64, lo: f64, hi: f64) -> Self {
        Self { mean, std, lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std == 0.0 {
            return self.mean.clamp(self.lo, self.hi);
        }
        for _ in 0..10_000 {
            let z: f64 = StandardNormal.sample(rng);
            let x = self.mean + self.std * z;
            if self.contains(x) {
                return x;
            }
        }
        self.mean.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FrameKind {
    I,
    P,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::I => "I",
            FrameKind::P => "P",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    /// Frames per second.
    pub frame_rate: f64,
    /// Slot of the first frame, `t_0`.
    pub initial_arrival_slot: u32,
    pub mean_frame_bits: f64,
    /// GOP length `K`: one I-frame followed by `K - 1` P-frames.
    pub gop_length: u32,
    /// Mean I-frame size over mean P-frame size.
    pub i_to_p_ratio: f64,
    pub weight_i: f64,
    pub weight_p: f64,
    /// Arrival jitter in milliseconds.
    pub jitter: TruncatedGaussian,
    /// Multiplicative size factor around the nominal per-kind size.
    pub size_factor: TruncatedGaussian,
    pub slot_ms: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            frame_rate: 60.0,
            initial_arrival_slot: 0,
            mean_frame_bits: 250_000.0,
            gop_length: 4,
            i_to_p_ratio: 1.5,
            weight_i: 1.0,
            weight_p: 0.1,
            jitter: TruncatedGaussian::new(0.0, 2.0, -4.0, 4.0),
            size_factor: TruncatedGaussian::new(1.0, 0.105, 0.5, 1.5),
            slot_ms: 0.5,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), TrafficError> {
        let bad = |m: &str| Err(TrafficError::Invalid(m.to_string()));
        if !(self.frame_rate > 0.0) {
            return bad("frame_rate must be > 0");
        }
        if self.gop_length == 0 {
            return bad("gop_length must be >= 1");
        }
        if !(self.i_to_p_ratio >= 1.0) {
            return bad("i_to_p_ratio must be >= 1");
        }
        if !(self.weight_i > 0.0 && self.weight_p > 0.0) {
            return bad("frame weights must be > 0");
        }
        if !(self.mean_frame_bits > 0.0) {
            return bad("mean_frame_bits must be > 0");
        }
        if !(self.slot_ms > 0.0) {
            return bad("slot length must be > 0");
        }
        for (name, d) in [("jitter", &self.jitter), ("size", &self.size_factor)] {
            if !(d.lo.is_finite() && d.hi.is_finite() && d.lo <= d.hi) {
                return bad(&format!("{name} truncation bounds must be finite and ordered"));
            }
            if !(d.std >= 0.0) {
                return bad(&format!("{name} std must be >= 0"));
            }
        }
        if !(self.size_factor.lo > 0.0) {
            return bad("size truncation lower bound must be > 0");
        }
        Ok(())
    }

    /// Frame period expressed in slots (may be fractional).
    pub fn frame_period_slots(&self) -> f64 {
        1000.0 / self.frame_rate / self.slot_ms
    }

    pub fn kind_of(&self, k: u32) -> FrameKind {
        if (k - 1).is_multiple_of(self.gop_length) {
            FrameKind::I
        } else {
            FrameKind::P
        }
    }

    pub fn weight_of(&self, kind: FrameKind) -> f64 {
        match kind {
            FrameKind::I => self.weight_i,
            FrameKind::P => self.weight_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameRecord {
    pub device: usize,
    /// 1-based frame ordinal within the device stream.
    pub k: u32,
    pub arrival_slot: u32,
    pub bits: f64,
    pub kind: FrameKind,
    pub weight: f64,
}

/// Arrival slot of frame `k` for a given jitter draw (milliseconds).
///
/// Returns a signed slot so that a negative jitter on an early frame is
/// visible to the caller; [`generate_frames`] clamps the result.
pub fn arrival_slot(cfg: &TrafficConfig, k: u32, jitter_ms: f64) -> Result<i64, TrafficError> {
    if k == 0 {
        return Err(TrafficError::ZeroFrameIndex(k));
    }
    if !cfg.jitter.contains(jitter_ms) {
        return Err(TrafficError::JitterOutOfBounds { jitter: jitter_ms, lo: cfg.jitter.lo, hi: cfg.jitter.hi });
    }
    let offset_ms = f64::from(k - 1) * 1000.0 / cfg.frame_rate + jitter_ms;
    let slots = (offset_ms / cfg.slot_ms + FLOOR_EPS).floor() as i64;
    Ok(i64::from(cfg.initial_arrival_slot) + slots)
}

/// Nominal `(I, P)` frame sizes in bits such that `I = ratio * P` and the
/// GOP-average size equals `mean_frame_bits`.
pub fn nominal_sizes(cfg: &TrafficConfig) -> (f64, f64) {
    let k = f64::from(cfg.gop_length);
    let p_bits = cfg.mean_frame_bits * k / (cfg.i_to_p_ratio + k - 1.0);
    (cfg.i_to_p_ratio * p_bits, p_bits)
}

/// Generates all frames of `device` arriving before `horizon_slots`.
pub fn generate_frames(cfg: &TrafficConfig, device: usize, horizon_slots: u32, seed: u64) -> Vec<FrameRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_frames_with(cfg, device, horizon_slots, &mut rng)
}

pub fn generate_frames_with<R: Rng + ?Sized>(
    cfg: &TrafficConfig,
    device: usize,
    horizon_slots: u32,
    rng: &mut R,
) -> Vec<FrameRecord> {
    let (i_bits, p_bits) = nominal_sizes(cfg);
    let mut frames = Vec::new();
    let mut last_arrival = 0i64;
    for k in 1u32.. {
        let earliest = arrival_slot(cfg, k, cfg.jitter.lo).expect("lower bound is in range");
        if earliest >= i64::from(horizon_slots) {
            break;
        }
        let jitter = cfg.jitter.sample(rng);
        let factor = cfg.size_factor.sample(rng);
        let raw = arrival_slot(cfg, k, jitter).expect("sampled jitter is in range");
        let arrival = raw.max(last_arrival).max(0);
        last_arrival = arrival;
        if arrival >= i64::from(horizon_slots) {
            continue;
        }
        let kind = cfg.kind_of(k);
        let nominal = match kind {
            FrameKind::I => i_bits,
            FrameKind::P => p_bits,
        };
        frames.push(FrameRecord {
            device,
            k,
            arrival_slot: arrival as u32,
            bits: nominal * factor,
            kind,
            weight: cfg.weight_of(kind),
        });
    }
    frames
}

#[derive(Serialize)]
struct FrameTraceRow<'a> {
    device: usize,
    k: u32,
    arrival_slot: u32,
    bits: f64,
    kind: &'a str,
    weight: f64,
}

/// Writes `device,k,arrival_slot,bits,kind,weight` rows.
pub fn write_frame_trace<W: std::io::Write>(frames: &[FrameRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in frames {
        w.serialize(FrameTraceRow {
            device: f.device,
            k: f.k,
            arrival_slot: f.arrival_slot,
            bits: f.bits,
            kind: f.kind.as_str(),
            weight: f.weight,
        })?;
    }
    w.flush()?;
    Ok(())
}
