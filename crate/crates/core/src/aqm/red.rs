//! Random Early Detection, gentle variant, optionally in byte mode.

use serde::{Deserialize, Serialize};

use crate::packet::Packet;
use crate::rng::RngStream;
use crate::time::SimTime;

use super::{EnqueueDecision, PacketBuffer, QueueDiscipline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedParams {
    pub q_weight: f64,
    pub min_th_bytes: u64,
    pub max_th_bytes: u64,
    pub buffer_cap_bytes: u64,
    pub max_p: f64,
    pub gentle: bool,
    pub byte_mode: bool,
    pub mean_pkt_bytes: u32,
}

impl RedParams {
    /// Thresholds and buffer derived from `min_th` with the usual rules:
    /// `max_th = 3 * min_th`, buffer `= 8 * min_th`.
    pub fn from_min_threshold(min_th_bytes: u64, q_weight: f64, max_p: f64, mean_pkt_bytes: u32) -> Self {
        RedParams {
            q_weight,
            min_th_bytes,
            max_th_bytes: 3 * min_th_bytes,
            buffer_cap_bytes: 8 * min_th_bytes,
            max_p,
            gentle: true,
            byte_mode: true,
            mean_pkt_bytes,
        }
    }

    /// Same rules, every threshold scaled by `ratio` (used for RIO's OUT profile).
    pub fn scaled(&self, ratio: f64) -> Self {
        RedParams {
            min_th_bytes: (self.min_th_bytes as f64 * ratio).round() as u64,
            max_th_bytes: (self.max_th_bytes as f64 * ratio).round() as u64,
            ..self.clone()
        }
    }

    /// Piecewise-linear base probability `p_b` for an average queue size.
    pub fn base_prob(&self, avg: f64) -> f64 {
        let min_th = self.min_th_bytes as f64;
        let max_th = self.max_th_bytes as f64;
        if avg < min_th {
            0.0
        } else if avg < max_th {
            self.max_p * (avg - min_th) / (max_th - min_th)
        } else if self.gentle && avg < 2.0 * max_th {
            self.max_p + (1.0 - self.max_p) * (avg - max_th) / max_th
        } else {
            1.0
        }
    }
}

impl Default for RedParams {
    fn default() -> Self {
        RedParams::from_min_threshold(15_000, 0.002, 0.1, 1040)
    }
}

/// RED control state: the average queue estimate and the inter-drop count.
#[derive(Debug, Clone, PartialEq)]
pub struct RedState {
    pub params: RedParams,
    /// EWMA of the queue length in bytes.
    pub avg: f64,
    /// Packets accepted since the last drop.
    pub count: u32,
    pub idle_since: Option<SimTime>,
    /// Transmission time of a mean-sized packet on the attached link; the
    /// unit in which idle periods are counted.
    pub idle_slot: SimTime,
}

impl RedState {
    pub fn new(params: RedParams, link_bw_bps: f64) -> Self {
        let idle_slot = SimTime::serialization(params.mean_pkt_bytes, link_bw_bps).max(SimTime::from_nanos(1));
        RedState { params, avg: 0.0, count: 0, idle_since: Some(SimTime::ZERO), idle_slot }
    }

    /// Updates the average on a packet arrival. An arrival to a queue that
    /// has been idle decays the average as if `m` empty-queue samples had
    /// been taken, where `m` is the number of mean-packet slots elapsed.
    pub fn update_avg(&mut self, queue_bytes: u64, now: SimTime) -> f64 {
        let w = self.params.q_weight;
        match self.idle_since.take() {
            Some(since) if queue_bytes == 0 => {
                let m = now.saturating_sub(since).as_nanos() / self.idle_slot.as_nanos();
                self.avg *= (1.0 - w).powi(m.min(i32::MAX as u64) as i32);
            }
            _ => {
                self.avg = (1.0 - w) * self.avg + w * queue_bytes as f64;
            }
        }
        self.avg
    }

    /// Marks the queue idle from `now` (call when it drains).
    pub fn mark_idle(&mut self, now: SimTime) {
        self.idle_since = Some(now);
    }

    /// The count-corrected drop probability `p_a` for an arriving packet.
    pub fn drop_prob(&self, pkt_size: u32) -> f64 {
        let mut p_b = self.params.base_prob(self.avg);
        if p_b >= 1.0 {
            return 1.0;
        }
        if self.params.byte_mode {
            p_b *= pkt_size as f64 / self.params.mean_pkt_bytes as f64;
        }
        let denom = 1.0 - self.count as f64 * p_b;
        if denom <= 0.0 {
            1.0
        } else {
            (p_b / denom).clamp(0.0, 1.0)
        }
    }

    pub fn on_drop(&mut self) {
        self.count = 0;
    }

    pub fn on_accept(&mut self) {
        if self.avg < self.params.min_th_bytes as f64 {
            self.count = 0;
        } else {
            self.count += 1;
        }
    }
}

/// A byte-mode gentle RED queue.
#[derive(Debug, Clone)]
pub struct RedQueue {
    pub red: RedState,
    buf: PacketBuffer,
    rng: RngStream,
}

impl RedQueue {
    pub fn new(params: RedParams, link_bw_bps: f64, rng: RngStream) -> Self {
        RedQueue { red: RedState::new(params, link_bw_bps), buf: PacketBuffer::new(), rng }
    }
}

impl QueueDiscipline for RedQueue {
    fn enqueue(&mut self, mut pkt: Packet, now: SimTime) -> EnqueueDecision {
        let cap = self.red.params.buffer_cap_bytes;
        if pkt.size_bytes as u64 > cap {
            self.red.on_drop();
            return EnqueueDecision::DroppedOverflow(pkt);
        }
        self.red.update_avg(self.buf.bytes(), now);
        let p = self.red.drop_prob(pkt.size_bytes);
        if self.rng.uniform() < p {
            self.red.on_drop();
            return EnqueueDecision::DroppedProbabilistic(pkt);
        }
        if self.buf.bytes() + pkt.size_bytes as u64 > cap {
            self.red.on_drop();
            return EnqueueDecision::DroppedOverflow(pkt);
        }
        self.red.on_accept();
        pkt.enqueued_at = Some(now);
        self.buf.push(pkt);
        EnqueueDecision::Enqueued
    }

    fn dequeue(&mut self, now: SimTime) -> Option<Packet> {
        let pkt = self.buf.pop()?;
        if self.buf.is_empty() {
            self.red.mark_idle(now);
        }
        Some(pkt)
    }

    fn len_packets(&self) -> usize {
        self.buf.len()
    }

    fn len_bytes(&self) -> u64 {
        self.buf.bytes()
    }

    fn iter(&self) -> Box<dyn Iterator<Item = &Packet> + '_> {
        Box::new(self.buf.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::TrafficClass;

    fn rel_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    fn busy_state() -> RedState {
        let mut s = RedState::new(RedParams::default(), 50e6);
        s.idle_since = None;
        s
    }

    #[test]
    fn ewma_substitution_and_fixed_point() {
        let mut s = busy_state();
        assert!(rel_eq(s.update_avg(10_000, SimTime::ZERO), 20.0));
        s.avg = 5000.0;
        assert!(rel_eq(s.update_avg(5000, SimTime::ZERO), 5000.0));
    }

    #[test]
    fn idle_decay_matches_repeated_multiplication() {
        let mut s = busy_state();
        s.avg = 1000.0;
        let slot = s.idle_slot;
        s.mark_idle(SimTime::ZERO);
        let now = SimTime::from_nanos(slot.as_nanos() * 100);
        let got = s.update_avg(0, now);
        let mut oracle = 1000.0;
        for _ in 0..100 {
            oracle *= 0.998;
        }
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
        assert!((got - 818.6).abs() < 0.05);
    }

    #[test]
    fn derived_thresholds() {
        let p = RedParams::default();
        assert_eq!(p.max_th_bytes, 3 * p.min_th_bytes);
        assert_eq!(p.buffer_cap_bytes, 8 * p.min_th_bytes);
    }

    #[test]
    fn drop_prob_regions() {
        let mut s = busy_state();
        s.avg = 15_000.0;
        assert_eq!(s.drop_prob(1040), 0.0);
        s.avg = 30_000.0;
        assert!(rel_eq(s.drop_prob(1040), 0.05));
        s.avg = 67_500.0;
        assert!(rel_eq(s.params.base_prob(s.avg), 0.55));
        s.avg = 90_000.0;
        assert_eq!(s.drop_prob(1040), 1.0);
    }

    #[test]
    fn gentle_continuity_at_max_th() {
        let p = RedParams::default();
        let max_th = p.max_th_bytes as f64;
        let below = p.base_prob(max_th - 1e-9);
        let at = p.base_prob(max_th);
        assert!((below - p.max_p).abs() < 1e-12);
        assert!(rel_eq(at, p.max_p));
    }

    #[test]
    fn byte_mode_and_count_correction() {
        let mut s = busy_state();
        s.avg = 30_000.0;
        assert!(rel_eq(s.drop_prob(520), 0.025));
        s.count = 10;
        // 0.05 / (1 - 10 * 0.05)
        assert!(rel_eq(s.drop_prob(1040), 0.1));
        s.count = 20;
        assert_eq!(s.drop_prob(1040), 1.0);
        s.on_drop();
        assert_eq!(s.count, 0);
    }

    #[test]
    fn queue_drops_when_saturated() {
        let mut q = RedQueue::new(RedParams::default(), 50e6, RngStream::new(1, 0));
        q.red.avg = 100_000.0;
        q.red.idle_since = None;
        let pkt = Packet::new(0, TrafficClass::FtpData, 1040, 0, 0, SimTime::ZERO);
        assert!(matches!(q.enqueue(pkt, SimTime::ZERO), EnqueueDecision::DroppedProbabilistic(_)));
    }
}
