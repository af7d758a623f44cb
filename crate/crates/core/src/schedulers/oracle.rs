//! Exhaustive search over per-slot frame orderings for tiny episodes.
//!
//! Any priority policy induces, slot by slot, an ordering of the waiting
//! frames, and the greedy allocation turns that ordering into grants. Trying
//! every ordering in every slot therefore bounds the quality of all policies.
//! Orderings that yield identical grants are merged, and sub-results are
//! memoized on the queue contents.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::simcore::{allocate, EpisodeMetrics, EpisodeSpec, FrameId, HistoryConfig, SimError, Simulator};
use crate::traffic::FrameRecord;

pub const MAX_DEVICES: usize = 3;
pub const MAX_FRAMES_PER_DEVICE: usize = 2;
pub const MAX_SLOTS: usize = 8;
pub const MAX_RBS: u32 = 6;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance too large to enumerate: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A fully deterministic small episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyInstance {
    pub devices: usize,
    pub frames: Vec<FrameRecord>,
    /// `rates[slot][device]`, bits per RB.
    pub rates: Vec<Vec<f64>>,
    pub rb_per_slot: u32,
    pub fdb_slots: u32,
}

impl TinyInstance {
    pub fn check_bounds(&self) -> Result<(), OracleError> {
        let too_large = |m: String| Err(OracleError::TooLarge(m));
        if self.devices > MAX_DEVICES {
            return too_large(format!("{} devices > {MAX_DEVICES}", self.devices));
        }
        for n in 0..self.devices {
            let count = self.frames.iter().filter(|f| f.device == n).count();
            if count > MAX_FRAMES_PER_DEVICE {
                return too_large(format!("device {n} has {count} frames > {MAX_FRAMES_PER_DEVICE}"));
            }
        }
        if self.rates.len() > MAX_SLOTS {
            return too_large(format!("{} slots > {MAX_SLOTS}", self.rates.len()));
        }
        if self.rb_per_slot > MAX_RBS {
            return too_large(format!("{} RBs per slot > {MAX_RBS}", self.rb_per_slot));
        }
        Ok(())
    }

    pub fn from_spec(spec: &EpisodeSpec) -> Self {
        Self {
            devices: spec.devices,
            frames: spec.frames.clone(),
            rates: spec.rates.clone(),
            rb_per_slot: spec.rb_per_slot,
            fdb_slots: spec.fdb_slots,
        }
    }

    pub fn to_spec(&self) -> Result<EpisodeSpec, SimError> {
        let gains = self.rates.iter().map(|r| vec![1.0; r.len()]).collect();
        EpisodeSpec::new(
            self.devices,
            self.frames.clone(),
            gains,
            self.rates.clone(),
            self.rb_per_slot,
            self.fdb_slots,
            HistoryConfig::default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Best achievable summed quality.
    pub quality: f64,
    /// Grants per slot of one optimal schedule.
    pub schedule: Schedule,
}

/// Grants `(frame, RBs)` of every slot.
pub type Schedule = Vec<Vec<(FrameId, u32)>>;

type Key = (u32, Vec<(usize, u64, u32)>);

struct Search {
    memo: HashMap<Key, (f64, Schedule)>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

impl Search {
    fn key(sim: &Simulator) -> Key {
        let q = sim.queue().iter().map(|e| (e.index, e.remaining_bits.to_bits(), e.rfdb)).collect();
        (sim.slot(), q)
    }

    /// Best future quality from the start of the simulator's current slot.
    fn best(&mut self, sim: &Simulator) -> Result<(f64, Schedule), SimError> {
        if sim.is_finished() {
            return Ok((0.0, Vec::new()));
        }
        let key = Self::key(sim);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let queue = sim.queue();
        let mut seen = HashSet::new();
        let mut best: Option<(f64, Schedule)> = None;
        for perm in permutations(queue.len()) {
            // Position 0 of the permutation gets the highest priority.
            let mut prio = vec![0.0; queue.len()];
            for (rank, &i) in perm.iter().enumerate() {
                prio[i] = (queue.len() - rank) as f64;
            }
            let grants = allocate(queue, &prio, sim.budget(), sim.rates())?;
            if !seen.insert(grants.clone()) {
                continue;
            }
            let mut next = sim.clone();
            let ids: Vec<FrameId> = queue.iter().map(|e| e.frame.id()).collect();
            let mut slot_grants = Vec::new();
            for (id, &g) in ids.iter().zip(&grants) {
                if g > 0 {
                    let pos = next.queue().iter().position(|e| e.frame.id() == *id).expect("queued");
                    next.serve(pos, g)?;
                    slot_grants.push((*id, g));
                }
            }
            let dropped = next.end_slot()?;
            let delta = 0.0 - dropped.iter().map(|f| f.weight).sum::<f64>();
            let (future, mut trace) = self.best(&next)?;
            let total = delta + future;
            if best.as_ref().is_none_or(|(q, _)| total > *q) {
                trace.insert(0, slot_grants);
                best = Some((total, trace));
            }
        }
        let best = best.unwrap_or_else(|| (0.0, Vec::new()));
        self.memo.insert(key, best.clone());
        Ok(best)
    }
}

/// Exact maximum of the summed quality over all priority policies.
pub fn oracle_best_quality(instance: &TinyInstance) -> Result<OracleResult, OracleError> {
    instance.check_bounds()?;
    let spec = Arc::new(instance.to_spec()?);
    let sim = Simulator::new(spec);
    let mut search = Search { memo: HashMap::new() };
    let (quality, schedule) = search.best(&sim)?;
    Ok(OracleResult { quality, schedule })
}

/// Plays a per-slot grant schedule through the simulator.
pub fn replay_schedule(spec: Arc<EpisodeSpec>, schedule: &[Vec<(FrameId, u32)>]) -> Result<EpisodeMetrics, SimError> {
    let mut sim = Simulator::new(spec);
    while !sim.is_finished() {
        for (id, g) in schedule.get(sim.slot() as usize).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some(pos) = sim.queue().iter().position(|e| e.frame.id() == *id) {
                sim.serve(pos, *g)?;
            }
        }
        sim.end_slot()?;
    }
    Ok(sim.metrics().clone())
}
