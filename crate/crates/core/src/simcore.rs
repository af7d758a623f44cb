//! Slot-level downlink simulation.
//!
//! A [`Simulator`] always sits *inside* a slot: arrivals for the current slot
//! are admitted, the channel is known and an RB budget is open. Callers either
//! hand the whole slot to a priority policy ([`Simulator::advance_slot`]) or
//! drive it grant by grant ([`Simulator::serve`] then [`Simulator::end_slot`]),
//! which is what the RL environment does.
//!
//! A frame arriving at slot `a` may be served in slots `a .. a + fdb`; its
//! remaining delay budget in slot `t` is `fdb + a - t`, so it enters the queue
//! with `rfdb = fdb` and is dropped at the end of the slot in which `rfdb == 1`
//! if bits are still outstanding.

use std::cmp::Ordering;
use std::sync::Arc;

use thiserror::Error;

use crate::schedulers::{DeviceView, FrameView, PolicyInput, PriorityPolicy, RateHistory};
use crate::traffic::{FrameKind, FrameRecord};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("expected {expected} priorities, got {got}")]
    PriorityCount { expected: usize, got: usize },
    #[error("priority for frame {0:?} is not a number")]
    NanPriority(FrameId),
    #[error("queue position {0} out of range")]
    BadPosition(usize),
    #[error("episode already finished")]
    Finished,
    #[error("invalid episode: {0}")]
    InvalidEpisode(String),
    #[error("policy error: {0}")]
    Policy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId {
    pub device: usize,
    pub k: u32,
}

impl FrameRecord {
    pub fn id(&self) -> FrameId {
        FrameId { device: self.device, k: self.k }
    }
}

/// Parameters of the per-device average-rate tracker used by PF-style policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryConfig {
    pub beta: f64,
    pub floor: f64,
}

impl Default for HistoryConfig {
    fn default() -> Self {
        Self { beta: 0.01, floor: 1.0 }
    }
}

/// Everything that is fixed for one episode: frames, channel and budgets.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub devices: usize,
    /// Sorted by `(arrival_slot, device, k)`.
    pub frames: Vec<FrameRecord>,
    /// `gains[slot][device]`.
    pub gains: Vec<Vec<f64>>,
    /// `rates[slot][device]`, bits per RB.
    pub rates: Vec<Vec<f64>>,
    pub rb_per_slot: u32,
    pub fdb_slots: u32,
    pub horizon: u32,
    pub history: HistoryConfig,
}

impl EpisodeSpec {
    pub fn new(
        devices: usize,
        mut frames: Vec<FrameRecord>,
        gains: Vec<Vec<f64>>,
        rates: Vec<Vec<f64>>,
        rb_per_slot: u32,
        fdb_slots: u32,
        history: HistoryConfig,
    ) -> Result<Self, SimError> {
        let bad = |m: String| Err(SimError::InvalidEpisode(m));
        let horizon = rates.len() as u32;
        if horizon == 0 {
            return bad("episode needs at least one slot".into());
        }
        if gains.len() != rates.len() {
            return bad("gain and rate tables differ in length".into());
        }
        if fdb_slots == 0 {
            return bad("frame delay budget must be >= 1 slot".into());
        }
        for (t, (g, c)) in gains.iter().zip(&rates).enumerate() {
            if g.len() != devices || c.len() != devices {
                return bad(format!("slot {t}: channel table width != {devices}"));
            }
            if c.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return bad(format!("slot {t}: rates must be finite and >= 0"));
            }
        }
        for f in &frames {
            if f.device >= devices {
                return bad(format!("frame {:?} names unknown device", f.id()));
            }
            if !(f.bits > 0.0) || !f.bits.is_finite() {
                return bad(format!("frame {:?} has non-positive size", f.id()));
            }
        }
        frames.retain(|f| f.arrival_slot < horizon);
        frames.sort_by_key(|f| (f.arrival_slot, f.device, f.k));
        if frames.windows(2).any(|w| w[0].id() == w[1].id()) {
            return bad("duplicate frame ids".into());
        }
        Ok(Self { devices, frames, gains, rates, rb_per_slot, fdb_slots, horizon, history })
    }

    /// Mean bits-per-RB of `device` over the whole episode.
    pub fn mean_rate(&self, device: usize) -> f64 {
        self.rates.iter().map(|r| r[device]).sum::<f64>() / self.rates.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    /// Position of the frame in [`EpisodeSpec::frames`].
    pub index: usize,
    pub frame: FrameRecord,
    pub remaining_bits: f64,
    /// Remaining frame delay budget, in slots.
    pub rfdb: u32,
}

impl QueueEntry {
    pub fn new(index: usize, frame: FrameRecord, fdb_slots: u32) -> Self {
        Self { index, frame, remaining_bits: frame.bits, rfdb: fdb_slots }
    }
}

/// Spends `n_rb` blocks of `bits_per_rb` on the entry. A non-positive
/// remainder means the frame is complete.
pub fn apply_grant(entry: &QueueEntry, n_rb: u32, bits_per_rb: f64) -> QueueEntry {
    let mut out = *entry;
    if n_rb > 0 {
        out.remaining_bits -= f64::from(n_rb) * bits_per_rb;
    }
    out
}

pub fn is_success(entry: &QueueEntry) -> bool {
    entry.remaining_bits <= 0.0
}

/// RBs needed to finish `remaining` bits at `bits_per_rb`, i.e. `ceil(r / c)`,
/// corrected so that the grant provably covers the remainder in floating point.
pub fn rbs_to_finish(remaining: f64, bits_per_rb: f64) -> u32 {
    if remaining <= 0.0 {
        return 0;
    }
    if !(bits_per_rb > 0.0) {
        return u32::MAX;
    }
    let n = (remaining / bits_per_rb).ceil();
    if n >= f64::from(u32::MAX) {
        return u32::MAX;
    }
    let mut n = n as u32;
    if f64::from(n) * bits_per_rb < remaining {
        n += 1;
    }
    n
}

/// Tie-break for equal priorities: earlier arrival, then lower device, then lower `k`.
fn tie_break(a: &FrameRecord, b: &FrameRecord) -> Ordering {
    (a.arrival_slot, a.device, a.k).cmp(&(b.arrival_slot, b.device, b.k))
}

/// Visit order for the given priorities: strictly decreasing priority with ties
/// broken by [`FrameRecord`] age and identity.
pub fn priority_order(waiting: &[QueueEntry], priorities: &[f64]) -> Result<Vec<usize>, SimError> {
    if priorities.len() != waiting.len() {
        return Err(SimError::PriorityCount { expected: waiting.len(), got: priorities.len() });
    }
    if let Some(i) = priorities.iter().position(|p| p.is_nan()) {
        return Err(SimError::NanPriority(waiting[i].frame.id()));
    }
    let mut order: Vec<usize> = (0..waiting.len()).collect();
    order.sort_by(|&a, &b| {
        priorities[b]
            .partial_cmp(&priorities[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| tie_break(&waiting[a].frame, &waiting[b].frame))
    });
    Ok(order)
}

/// Greedy RB allocation: frames are visited in priority order and each gets
/// `min(ceil(r / c), budget left)` blocks. Grants are aligned with `waiting`.
pub fn allocate(
    waiting: &[QueueEntry],
    priorities: &[f64],
    n_rb_total: u32,
    bits_per_rb: &[f64],
) -> Result<Vec<u32>, SimError> {
    let order = priority_order(waiting, priorities)?;
    let mut grants = vec![0u32; waiting.len()];
    let mut left = n_rb_total;
    for i in order {
        if left == 0 {
            break;
        }
        let e = &waiting[i];
        let g = rbs_to_finish(e.remaining_bits, bits_per_rb[e.frame.device]).min(left);
        grants[i] = g;
        left -= g;
    }
    Ok(grants)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    Pending,
    Queued,
    Completed { slot: u32 },
    Dropped { slot: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot: u32,
    pub grants: Vec<(FrameId, u32)>,
    pub completed: Vec<FrameId>,
    pub dropped: Vec<FrameId>,
    /// Change of the summed quality in this slot (minus the dropped weights).
    pub quality_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    /// Per-device quality: minus the summed weight of missed frames.
    pub quality: Vec<f64>,
    pub i_success: Vec<u32>,
    pub i_total: Vec<u32>,
    pub p_success: Vec<u32>,
    pub p_total: Vec<u32>,
    /// RBs granted in each slot.
    pub rb_used: Vec<u32>,
}

impl EpisodeMetrics {
    fn new(devices: usize, horizon: u32) -> Self {
        Self {
            quality: vec![0.0; devices],
            i_success: vec![0; devices],
            i_total: vec![0; devices],
            p_success: vec![0; devices],
            p_total: vec![0; devices],
            rb_used: vec![0; horizon as usize],
        }
    }

    pub fn total_quality(&self) -> f64 {
        self.quality.iter().sum()
    }

    fn rate(success: &[u32], total: &[u32]) -> f64 {
        let t: u32 = total.iter().sum();
        if t == 0 {
            1.0
        } else {
            f64::from(success.iter().sum::<u32>()) / f64::from(t)
        }
    }

    /// I-frame success rate over frames whose deadline has passed (1 if none).
    pub fn i_rate(&self) -> f64 {
        Self::rate(&self.i_success, &self.i_total)
    }

    pub fn p_rate(&self) -> f64 {
        Self::rate(&self.p_success, &self.p_total)
    }

    pub fn utilization(&self, rb_per_slot: u32) -> f64 {
        if self.rb_used.is_empty() || rb_per_slot == 0 {
            return 0.0;
        }
        let used: u64 = self.rb_used.iter().map(|&x| u64::from(x)).sum();
        used as f64 / (self.rb_used.len() as f64 * f64::from(rb_per_slot))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServeOutcome {
    pub granted: u32,
    pub completed: bool,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    spec: Arc<EpisodeSpec>,
    slot: u32,
    next_frame: usize,
    queue: Vec<QueueEntry>,
    budget: u32,
    status: Vec<FrameStatus>,
    served_bits: Vec<f64>,
    history: Vec<RateHistory>,
    metrics: EpisodeMetrics,
}

impl Simulator {
    pub fn new(spec: Arc<EpisodeSpec>) -> Self {
        let history = (0..spec.devices)
            .map(|n| RateHistory::new(spec.mean_rate(n), spec.history.beta, spec.history.floor))
            .collect();
        let mut sim = Self {
            slot: 0,
            next_frame: 0,
            queue: Vec::new(),
            budget: spec.rb_per_slot,
            status: vec![FrameStatus::Pending; spec.frames.len()],
            served_bits: vec![0.0; spec.devices],
            history,
            metrics: EpisodeMetrics::new(spec.devices, spec.horizon),
            spec,
        };
        sim.admit();
        sim
    }

    fn admit(&mut self) {
        let frames = &self.spec.frames;
        while self.next_frame < frames.len() && frames[self.next_frame].arrival_slot == self.slot {
            let i = self.next_frame;
            self.queue.push(QueueEntry::new(i, frames[i], self.spec.fdb_slots));
            self.status[i] = FrameStatus::Queued;
            self.next_frame += 1;
        }
    }

    pub fn spec(&self) -> &Arc<EpisodeSpec> {
        &self.spec
    }

    pub fn slot(&self) -> u32 {
        self.slot
    }

    pub fn is_finished(&self) -> bool {
        self.slot >= self.spec.horizon
    }

    pub fn queue(&self) -> &[QueueEntry] {
        &self.queue
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    /// Bits per RB of every device in the current slot.
    pub fn rates(&self) -> &[f64] {
        &self.spec.rates[self.slot.min(self.spec.horizon - 1) as usize]
    }

    pub fn gains(&self) -> &[f64] {
        &self.spec.gains[self.slot.min(self.spec.horizon - 1) as usize]
    }

    pub fn history(&self) -> &[RateHistory] {
        &self.history
    }

    pub fn metrics(&self) -> &EpisodeMetrics {
        &self.metrics
    }

    pub fn status(&self) -> &[FrameStatus] {
        &self.status
    }

    /// Grants up to `n_rb` blocks (capped by the open budget) to the frame at
    /// queue position `pos`. A completed frame leaves the queue immediately.
    pub fn serve(&mut self, pos: usize, n_rb: u32) -> Result<ServeOutcome, SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        let entry = *self.queue.get(pos).ok_or(SimError::BadPosition(pos))?;
        let granted = n_rb.min(self.budget);
        if granted == 0 {
            return Ok(ServeOutcome { granted, completed: false });
        }
        let device = entry.frame.device;
        let c = self.rates()[device];
        let updated = apply_grant(&entry, granted, c);
        self.served_bits[device] += (f64::from(granted) * c).min(entry.remaining_bits);
        self.budget -= granted;
        self.metrics.rb_used[self.slot as usize] += granted;
        let completed = is_success(&updated);
        if completed {
            self.status[entry.index] = FrameStatus::Completed { slot: self.slot };
            match entry.frame.kind {
                FrameKind::I => {
                    self.metrics.i_success[device] += 1;
                    self.metrics.i_total[device] += 1;
                }
                FrameKind::P => {
                    self.metrics.p_success[device] += 1;
                    self.metrics.p_total[device] += 1;
                }
            }
            self.queue.remove(pos);
        } else {
            self.queue[pos] = updated;
        }
        Ok(ServeOutcome { granted, completed })
    }

    /// Closes the current slot: frames on their last budget slot are dropped,
    /// the others age by one slot, rate histories update, and the next slot
    /// opens with its arrivals. Returns the dropped frames.
    pub fn end_slot(&mut self) -> Result<Vec<FrameRecord>, SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        let mut dropped = Vec::new();
        let slot = self.slot;
        let metrics = &mut self.metrics;
        let status = &mut self.status;
        self.queue.retain_mut(|e| {
            if e.rfdb <= 1 {
                let n = e.frame.device;
                metrics.quality[n] -= e.frame.weight;
                match e.frame.kind {
                    FrameKind::I => metrics.i_total[n] += 1,
                    FrameKind::P => metrics.p_total[n] += 1,
                }
                status[e.index] = FrameStatus::Dropped { slot };
                dropped.push(e.frame);
                false
            } else {
                e.rfdb -= 1;
                true
            }
        });
        for (h, served) in self.history.iter_mut().zip(self.served_bits.iter_mut()) {
            *h = h.updated(*served);
            *served = 0.0;
        }
        self.slot += 1;
        if self.is_finished() {
            self.budget = 0;
        } else {
            self.budget = self.spec.rb_per_slot;
            self.admit();
        }
        Ok(dropped)
    }

    /// Policy view of the current slot.
    pub fn policy_input(&self) -> PolicyInput {
        let frames = self
            .queue
            .iter()
            .map(|e| FrameView {
                id: e.frame.id(),
                arrival_slot: e.frame.arrival_slot,
                size_bits: e.frame.bits,
                remaining_bits: e.remaining_bits,
                rfdb: e.rfdb,
                weight: e.frame.weight,
            })
            .collect();
        let devices = (0..self.spec.devices)
            .map(|n| DeviceView {
                gain: self.gains()[n],
                bits_per_rb: self.rates()[n],
                avg_rate: self.history[n].value(),
            })
            .collect();
        PolicyInput { slot: self.slot, frames, devices, rb_budget: self.budget }
    }

    /// Runs one whole slot under `policy`: priorities, greedy allocation,
    /// completions, then the slot close.
    pub fn advance_slot(&mut self, policy: &mut dyn PriorityPolicy) -> Result<SlotOutcome, SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        let slot = self.slot;
        let input = self.policy_input();
        let priorities = policy.priorities(&input).map_err(|e| SimError::Policy(e.to_string()))?;
        let grants = allocate(&self.queue, &priorities, self.budget, self.rates())?;
        let ids: Vec<FrameId> = self.queue.iter().map(|e| e.frame.id()).collect();
        let mut outcome =
            SlotOutcome { slot, grants: Vec::new(), completed: Vec::new(), dropped: Vec::new(), quality_delta: 0.0 };
        for (id, &g) in ids.iter().zip(&grants) {
            if g == 0 {
                continue;
            }
            let pos = self.queue.iter().position(|e| e.frame.id() == *id).expect("granted frame is queued");
            let served = self.serve(pos, g)?;
            outcome.grants.push((*id, served.granted));
            if served.completed {
                outcome.completed.push(*id);
            }
        }
        let dropped = self.end_slot()?;
        outcome.quality_delta = 0.0 - dropped.iter().map(|f| f.weight).sum::<f64>();
        outcome.dropped = dropped.iter().map(FrameRecord::id).collect();
        Ok(outcome)
    }

    pub fn run_to_end(&mut self, policy: &mut dyn PriorityPolicy) -> Result<&EpisodeMetrics, SimError> {
        while !self.is_finished() {
            self.advance_slot(policy)?;
        }
        Ok(&self.metrics)
    }

    /// Quality recomputed from the per-frame status ledger rather than the
    /// running per-device sums.
    pub fn ledger_quality(&self) -> f64 {
        self.status
            .iter()
            .zip(&self.spec.frames)
            .filter(|(s, _)| matches!(s, FrameStatus::Dropped { .. }))
            .map(|(_, f)| -f.weight)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedulers::FixedOrder;

    fn frame(device: usize, k: u32, arrival: u32, bits: f64, kind: FrameKind) -> FrameRecord {
        let weight = if kind == FrameKind::I { 1.0 } else { 0.1 };
        FrameRecord { device, k, arrival_slot: arrival, bits, kind, weight }
    }

    fn entry(device: usize, k: u32, bits: f64) -> QueueEntry {
        QueueEntry::new(0, frame(device, k, 0, bits, FrameKind::P), 20)
    }

    fn spec(frames: Vec<FrameRecord>, devices: usize, slots: usize, c: f64, rb: u32, fdb: u32) -> Arc<EpisodeSpec> {
        let rates = vec![vec![c; devices]; slots];
        let gains = vec![vec![1.0; devices]; slots];
        Arc::new(EpisodeSpec::new(devices, frames, gains, rates, rb, fdb, HistoryConfig::default()).unwrap())
    }

    #[test]
    fn apply_grant_examples() {
        let e = entry(0, 1, 1000.0);
        assert_eq!(apply_grant(&e, 0, 400.0), e);
        assert_eq!(apply_grant(&e, 2, 400.0).remaining_bits, 200.0);
        let done = apply_grant(&e, 3, 400.0);
        assert_eq!(done.remaining_bits, -200.0);
        assert!(is_success(&done));
    }

    #[test]
    fn success_indicator_boundary() {
        let mut e = entry(0, 1, 1000.0);
        e.remaining_bits = 0.0;
        assert!(is_success(&e));
        e.remaining_bits = 1.0;
        assert!(!is_success(&e));
    }

    #[test]
    fn allocate_examples() {
        let c = [100.0];
        let one = [entry(0, 1, 350.0)];
        assert_eq!(allocate(&one, &[1.0], 10, &c).unwrap(), vec![4]);

        let two = [entry(0, 1, 400.0), entry(0, 2, 2000.0)];
        assert_eq!(allocate(&two, &[2.0, 1.0], 10, &c).unwrap(), vec![4, 6]);
        assert_eq!(allocate(&two, &[2.0, 1.0], 0, &c).unwrap(), vec![0, 0]);
    }

    #[test]
    fn allocate_rejects_malformed_priorities() {
        let two = [entry(0, 1, 400.0), entry(1, 1, 400.0)];
        let c = [100.0, 100.0];
        assert_eq!(allocate(&two, &[1.0], 10, &c), Err(SimError::PriorityCount { expected: 2, got: 1 }));
        assert!(matches!(allocate(&two, &[1.0, f64::NAN], 10, &c), Err(SimError::NanPriority(_))));
    }

    #[test]
    fn ties_go_to_earlier_arrival_then_device() {
        let mut a = entry(1, 1, 500.0);
        a.frame.arrival_slot = 3;
        let mut b = entry(0, 1, 500.0);
        b.frame.arrival_slot = 3;
        let mut old = entry(2, 1, 500.0);
        old.frame.arrival_slot = 1;
        let order = priority_order(&[a, b, old], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(order, vec![2, 1, 0]);
    }

    #[test]
    fn rbs_to_finish_covers_remainder() {
        assert_eq!(rbs_to_finish(0.0, 3.0), 0);
        assert_eq!(rbs_to_finish(350.0, 100.0), 4);
        assert_eq!(rbs_to_finish(400.0, 100.0), 4);
        assert_eq!(rbs_to_finish(1.0, 0.0), u32::MAX);
        for (r, c) in [(0.3, 0.1), (0.7, 0.1), (1e6, 3.3), (2.0 / 3.0, 1.0 / 3.0)] {
            let n = rbs_to_finish(r, c);
            assert!(r - f64::from(n) * c <= 0.0);
            assert!(r - f64::from(n - 1) * c > 0.0 || (r / c).fract() == 0.0);
        }
    }

    #[test]
    fn empty_queue_slot_is_inert() {
        let mut sim = Simulator::new(spec(vec![], 2, 5, 100.0, 4, 3));
        let out = sim.advance_slot(&mut FixedOrder).unwrap();
        assert!(out.grants.is_empty());
        assert_eq!(out.quality_delta, 0.0);
    }

    #[test]
    fn unserved_p_frame_costs_its_weight() {
        // Zero budget: the frame can never be served.
        let s = spec(vec![frame(0, 2, 0, 500.0, FrameKind::P)], 1, 6, 100.0, 0, 3);
        let mut sim = Simulator::new(s);
        let mut deltas = Vec::new();
        while !sim.is_finished() {
            deltas.push(sim.advance_slot(&mut FixedOrder).unwrap().quality_delta);
        }
        // Service window is slots 0, 1, 2; the drop lands at the close of slot 2.
        assert_eq!(deltas, vec![0.0, 0.0, -0.1, 0.0, 0.0, 0.0]);
        assert_eq!(sim.metrics().quality, vec![-0.1]);
        assert_eq!(sim.metrics().p_total, vec![1]);
        assert_eq!(sim.ledger_quality(), -0.1);
    }

    #[test]
    fn frames_that_fit_keep_quality_at_zero() {
        let frames = (0..6).map(|k| frame(k % 2, k as u32 + 1, k as u32, 300.0, FrameKind::I)).collect();
        let mut sim = Simulator::new(spec(frames, 2, 12, 100.0, 10, 2));
        let m = sim.run_to_end(&mut FixedOrder).unwrap();
        assert_eq!(m.quality, vec![0.0, 0.0]);
        assert_eq!(m.i_rate(), 1.0);
    }

    #[test]
    fn early_completion_leaves_queue_at_once() {
        let s = spec(vec![frame(0, 1, 0, 250.0, FrameKind::I)], 1, 4, 100.0, 10, 5);
        let mut sim = Simulator::new(s);
        let out = sim.serve(0, 3).unwrap();
        assert!(out.completed);
        assert!(sim.queue().is_empty());
        assert_eq!(sim.budget(), 7);
        assert_eq!(sim.status()[0], FrameStatus::Completed { slot: 0 });
    }

    #[test]
    fn completion_on_last_budget_slot_counts() {
        // fdb = 2: served in slot 0 partially and finished in slot 1.
        let s = spec(vec![frame(0, 1, 0, 500.0, FrameKind::I)], 1, 4, 100.0, 3, 2);
        let mut sim = Simulator::new(s);
        sim.advance_slot(&mut FixedOrder).unwrap();
        let out = sim.advance_slot(&mut FixedOrder).unwrap();
        assert_eq!(out.completed.len(), 1);
        assert_eq!(sim.metrics().total_quality(), 0.0);
    }

    #[test]
    fn spec_validation() {
        let h = HistoryConfig::default();
        assert!(EpisodeSpec::new(1, vec![], vec![], vec![], 4, 2, h).is_err());
        let f = frame(3, 1, 0, 10.0, FrameKind::I);
        assert!(EpisodeSpec::new(1, vec![f], vec![vec![1.0]], vec![vec![1.0]], 4, 2, h).is_err());
        let z = frame(0, 1, 0, 0.0, FrameKind::I);
        assert!(EpisodeSpec::new(1, vec![z], vec![vec![1.0]], vec![vec![1.0]], 4, 2, h).is_err());
    }
}
