//! Per-slot achievable bits per resource block.
//!
//! Gains come from a street-canyon LOS urban-microcell pathloss and optional
//! i.i.d. block Rayleigh fading (one exponential power draw per device per slot).

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    None,
    BlockRayleigh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub tx_power_w: f64,
    pub rb_bandwidth_hz: f64,
    pub noise_psd_w_per_hz: f64,
    pub carrier_ghz: f64,
    /// Side of the square deployment area; the base station sits at its centre.
    pub cell_side_m: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub fading: Fading,
    pub slot_s: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            tx_power_w: 0.2,
            rb_bandwidth_hz: 12.0 * 30e3,
            noise_psd_w_per_hz: dbm_per_hz_to_w(-174.0),
            carrier_ghz: 3.5,
            cell_side_m: 500.0,
            bs_height_m: 10.0,
            ue_height_m: 1.5,
            fading: Fading::BlockRayleigh,
            slot_s: 0.5e-3,
        }
    }
}

pub fn dbm_per_hz_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

/// Channel of every device for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gain: Vec<f64>,
    pub bits_per_rb: Vec<f64>,
}

/// Shannon bits carried by one RB in one slot: `dt * B * log2(1 + p h / (B N0))`.
pub fn bits_per_rb(power_w: f64, gain: f64, bandwidth_hz: f64, noise_psd: f64, slot_s: f64) -> f64 {
    let snr = power_w * gain / (bandwidth_hz * noise_psd);
    slot_s * bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2
}

/// Linear pathloss gain at a 2D distance from the base station.
pub fn pathloss_gain(cfg: &ChannelConfig, distance_2d_m: f64) -> f64 {
    let dh = cfg.bs_height_m - cfg.ue_height_m;
    let d3 = (distance_2d_m * distance_2d_m + dh * dh).sqrt().max(1.0);
    let pl_db = 32.4 + 21.0 * d3.log10() + 20.0 * cfg.carrier_ghz.log10();
    10f64.powf(-pl_db / 10.0)
}

pub fn distance_to_bs(cfg: &ChannelConfig, p: Position) -> f64 {
    let c = cfg.cell_side_m / 2.0;
    ((p.x - c).powi(2) + (p.y - c).powi(2)).sqrt()
}

/// Uniform device placement in the square cell.
pub fn sample_positions<R: Rng + ?Sized>(cfg: &ChannelConfig, devices: usize, rng: &mut R) -> Vec<Position> {
    (0..devices)
        .map(|_| Position { x: rng.random::<f64>() * cfg.cell_side_m, y: rng.random::<f64>() * cfg.cell_side_m })
        .collect()
}

/// Draws the channel of every device for `slot`. The draw depends only on
/// `(seed, slot, device)`, so slots can be sampled in any order.
pub fn sample_slot_gains(cfg: &ChannelConfig, positions: &[Position], slot: u32, seed: u64) -> ChannelState {
    let mut gain = Vec::with_capacity(positions.len());
    for (n, &p) in positions.iter().enumerate() {
        let base = pathloss_gain(cfg, distance_to_bs(cfg, p));
        let fade = match cfg.fading {
            Fading::None => 1.0,
            Fading::BlockRayleigh => {
                let mut rng = seeding::rng_for(seed, &[seeding::CHANNEL, u64::from(slot), n as u64]);
                Exp1.sample(&mut rng)
            }
        };
        gain.push(base * fade);
    }
    let bits_per_rb = gain
        .iter()
        .map(|&h| bits_per_rb(cfg.tx_power_w, h, cfg.rb_bandwidth_hz, cfg.noise_psd_w_per_hz, cfg.slot_s))
        .collect();
    ChannelState { gain, bits_per_rb }
}

#[derive(Serialize)]
struct RateRow {
    slot: usize,
    device: usize,
    gain: f64,
    bits_per_rb: f64,
}

/// Debug dump: `slot,device,gain,bits_per_rb`.
pub fn write_rate_trace<W: std::io::Write>(slots: &[ChannelState], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (slot, st) in slots.iter().enumerate() {
        for (device, (&gain, &bits_per_rb)) in st.gain.iter().zip(&st.bits_per_rb).enumerate() {
            w.serialize(RateRow { slot, device, gain, bits_per_rb })?;
        }
    }
    w.flush()?;
    Ok(())
}
