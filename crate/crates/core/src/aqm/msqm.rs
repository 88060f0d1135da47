//! Modified size-based queue management.
//!
//! M-SQM tracks a moving average of arriving packet sizes, `msqm_thresh`.
//! Packets at or above the threshold are dropped with the probability a RED
//! gateway would use; smaller packets get that probability scaled down by
//! `pkt_size / msqm_thresh`. Every admitted packet remembers the probability
//! it was admitted with, and under congestion a small arrival may take the
//! place of the queued packet with the highest stored probability.

use serde::{Deserialize, Serialize};

use crate::packet::Packet;
use crate::rng::RngStream;
use crate::time::SimTime;

use super::{EnqueueDecision, PacketBuffer, QueueDiscipline, RedParams, RedState};

/// Weight of the newest sample in the size average.
pub const MSQM_ALPHA: f64 = 0.1;

/// When the victim-replacement step is allowed to run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcnMode {
    /// Small arrivals, whatever the buffer state.
    #[default]
    SmallArrivals,
    /// Small arrivals only, when the buffer would overflow or the RED average
    /// has reached `max_th`.
    OverflowOrHot,
    /// Small arrivals only, when the buffer would overflow.
    OverflowOnly,
    /// Every admitted arrival, whatever its size.
    Always,
}

/// One step of the size average. The first sample initializes it.
pub fn update_threshold(thresh: Option<f64>, alpha: f64, pkt_size: u32) -> f64 {
    let s = pkt_size as f64;
    match thresh {
        None => s,
        Some(t) => t + alpha * (s - t),
    }
}

/// Scales `red_drop` for packets smaller than the threshold. A packet whose
/// size equals the threshold counts as big.
pub fn msqm_drop_prob(red_drop: f64, pkt_size: u32, thresh: f64) -> f64 {
    let s = pkt_size as f64;
    if thresh > s {
        red_drop * (s / thresh)
    } else {
        red_drop
    }
}

/// Index of the queued packet to evict for an arrival whose drop probability
/// is `incoming_prob`: the highest stored probability strictly above it,
/// ties going to the larger packet and then the earlier enqueue.
pub fn select_victim<'a>(queued: impl IntoIterator<Item = &'a Packet>, incoming_prob: f64) -> Option<usize> {
    let mut best: Option<(usize, &Packet, f64)> = None;
    for (i, p) in queued.into_iter().enumerate() {
        let prob = p.stored_drop_prob.unwrap_or(0.0);
        if prob <= incoming_prob {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, b, bprob)) => {
                prob > bprob
                    || (prob == bprob
                        && (p.size_bytes > b.size_bytes
                            || (p.size_bytes == b.size_bytes && p.enqueued_at < b.enqueued_at)))
            }
        };
        if better {
            best = Some((i, p, prob));
        }
    }
    best.map(|(i, _, _)| i)
}

#[derive(Debug, Clone)]
pub struct MsqmQueue {
    pub red: RedState,
    /// Moving average of arriving sizes; `None` until the first arrival.
    pub thresh: Option<f64>,
    pub alpha: f64,
    pub ecn_mode: EcnMode,
    buf: PacketBuffer,
    rng: RngStream,
}

impl MsqmQueue {
    pub fn new(params: RedParams, ecn_mode: EcnMode, link_bw_bps: f64, rng: RngStream) -> Self {
        MsqmQueue {
            red: RedState::new(params, link_bw_bps),
            thresh: None,
            alpha: MSQM_ALPHA,
            ecn_mode,
            buf: PacketBuffer::new(),
            rng,
        }
    }

    pub fn occupancy_bytes(&self) -> u64 {
        self.buf.bytes()
    }

    fn admit(&mut self, mut pkt: Packet, prob: f64, now: SimTime) {
        pkt.stored_drop_prob = Some(prob);
        pkt.enqueued_at = Some(now);
        self.buf.push(pkt);
    }
}

impl QueueDiscipline for MsqmQueue {
    fn enqueue(&mut self, pkt: Packet, now: SimTime) -> EnqueueDecision {
        let cap = self.red.params.buffer_cap_bytes;
        let size = pkt.size_bytes;
        if size as u64 > cap {
            self.red.on_drop();
            return EnqueueDecision::DroppedOverflow(pkt);
        }

        let thresh = update_threshold(self.thresh, self.alpha, size);
        self.thresh = Some(thresh);

        self.red.update_avg(self.buf.bytes(), now);
        let red_drop = self.red.drop_prob(size);
        let drop = msqm_drop_prob(red_drop, size, thresh);

        if self.rng.uniform() < drop {
            self.red.on_drop();
            return EnqueueDecision::DroppedProbabilistic(pkt);
        }

        let fits = self.buf.bytes() + size as u64 <= cap;
        let small = (size as f64) < thresh;
        let hot = self.red.avg >= self.red.params.max_th_bytes as f64;
        let replace = match self.ecn_mode {
            EcnMode::SmallArrivals => small,
            EcnMode::OverflowOrHot => small && (!fits || hot),
            EcnMode::OverflowOnly => small && !fits,
            EcnMode::Always => true,
        };

        if replace {
            if let Some(i) = select_victim(self.buf.iter(), drop) {
                // Only a bigger packet is displaced by a smaller arrival.
                let victim_size = self.buf.get(i).map_or(0, |v| v.size_bytes as u64);
                if victim_size > size as u64 && self.buf.bytes() - victim_size + size as u64 <= cap {
                    let mut victim = self.buf.remove(i).expect("victim index in range");
                    victim.stored_drop_prob = None;
                    self.red.on_drop();
                    self.admit(pkt, drop, now);
                    return EnqueueDecision::EnqueuedWithVictim(victim);
                }
            }
        }

        if !fits {
            self.red.on_drop();
            return EnqueueDecision::DroppedOverflow(pkt);
        }
        self.red.on_accept();
        self.admit(pkt, drop, now);
        EnqueueDecision::Enqueued
    }

    fn dequeue(&mut self, now: SimTime) -> Option<Packet> {
        let mut pkt = self.buf.pop()?;
        pkt.stored_drop_prob = None;
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

    fn pkt(id: u64, size: u32) -> Packet {
        let class = if size >= 1040 { TrafficClass::FtpData } else { TrafficClass::Voip };
        Packet::new(id, class, size, 0, id, SimTime::ZERO)
    }

    fn queued(id: u64, size: u32, prob: f64, at: u64) -> Packet {
        let mut p = pkt(id, size);
        p.stored_drop_prob = Some(prob);
        p.enqueued_at = Some(SimTime::from_nanos(at));
        p
    }

    #[test]
    fn threshold_updates() {
        assert_eq!(update_threshold(None, MSQM_ALPHA, 1040), 1040.0);
        assert!((update_threshold(Some(1040.0), MSQM_ALPHA, 160) - 952.0).abs() < 1e-12);
        assert_eq!(update_threshold(Some(160.0), MSQM_ALPHA, 160), 160.0);
    }

    #[test]
    fn drop_prob_branches() {
        let p = msqm_drop_prob(0.1, 160, 952.0);
        assert!((p - 0.1 * 160.0 / 952.0).abs() < 1e-15);
        assert!((p - 0.016807).abs() < 1e-6);
        assert_eq!(msqm_drop_prob(0.1, 1040, 952.0), 0.1);
        assert_eq!(msqm_drop_prob(0.1, 500, 500.0), 0.1);
    }

    #[test]
    fn victim_examples() {
        let q = [queued(0, 1040, 0.1, 0), queued(1, 1040, 0.4, 1), queued(2, 160, 0.4, 2)];
        assert_eq!(select_victim(&q, 0.05), Some(1));
        let q = [queued(0, 1040, 0.0, 0), queued(1, 1040, 0.0, 1)];
        assert_eq!(select_victim(&q, 0.0), None);
        let q = [queued(0, 1040, 0.9, 0)];
        assert_eq!(select_victim(&q, 0.1), Some(0));
        // equal prob and size: earlier enqueue wins
        let q = [queued(0, 1040, 0.4, 7), queued(1, 1040, 0.4, 3)];
        assert_eq!(select_victim(&q, 0.0), Some(1));
    }

    #[test]
    fn first_packet_enqueued_clean() {
        let mut q = MsqmQueue::new(RedParams::default(), EcnMode::default(), 50e6, RngStream::new(1, 0));
        assert_eq!(q.enqueue(pkt(0, 1040), SimTime::ZERO), EnqueueDecision::Enqueued);
        assert_eq!(q.thresh, Some(1040.0));
        assert_eq!(q.buf.get(0).unwrap().stored_drop_prob, Some(0.0));
        let out = q.dequeue(SimTime::ZERO).unwrap();
        assert_eq!(out.stored_drop_prob, None);
        assert_eq!(q.occupancy_bytes(), 0);
    }

    #[test]
    fn certain_drop_ignores_rng() {
        for seed in 0..20 {
            let mut q = MsqmQueue::new(RedParams::default(), EcnMode::default(), 50e6, RngStream::new(seed, 0));
            q.thresh = Some(1040.0);
            q.red.idle_since = None;
            q.red.avg = 2.0 * q.red.params.max_th_bytes as f64 + 10_000.0;
            assert!(matches!(q.enqueue(pkt(0, 1040), SimTime::ZERO), EnqueueDecision::DroppedProbabilistic(_)));
        }
    }

    #[test]
    fn full_buffer_small_arrival_evicts_highest_prob() {
        // Buffer fits exactly three big packets.
        let params = RedParams { buffer_cap_bytes: 3 * 1040, ..RedParams::default() };
        let mut q = MsqmQueue::new(params, EcnMode::OverflowOrHot, 50e6, RngStream::new(3, 0));
        for (id, prob) in [(10u64, 0.3), (11, 0.5), (12, 0.2)] {
            q.buf.push(queued(id, 1040, prob, id));
        }
        q.thresh = Some(1040.0);
        q.red.idle_since = None;
        assert_eq!(select_victim(q.buf.iter(), 0.01), Some(1));
        // avg below min_th: the arrival's msqm_drop is 0
        q.red.avg = 0.0;
        let d = q.enqueue(pkt(99, 160), SimTime::from_nanos(50));
        match d {
            EnqueueDecision::EnqueuedWithVictim(v) => assert_eq!(v.id, 11),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(q.occupancy_bytes(), 2 * 1040 + 160);
        let ids: Vec<u64> = q.buf.iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![10, 12, 99]);
    }

    #[test]
    fn big_arrival_on_full_buffer_overflows() {
        let params = RedParams { buffer_cap_bytes: 2 * 1040, ..RedParams::default() };
        let mut q = MsqmQueue::new(params, EcnMode::OverflowOrHot, 50e6, RngStream::new(3, 0));
        q.buf.push(queued(0, 1040, 0.9, 0));
        q.buf.push(queued(1, 1040, 0.9, 1));
        q.thresh = Some(1040.0);
        q.red.idle_since = None;
        assert!(matches!(q.enqueue(pkt(2, 1040), SimTime::ZERO), EnqueueDecision::DroppedOverflow(_)));
    }

    #[test]
    fn oversized_packet_rejected() {
        let params = RedParams { buffer_cap_bytes: 1000, ..RedParams::default() };
        let mut q = MsqmQueue::new(params, EcnMode::Always, 50e6, RngStream::new(3, 0));
        assert!(matches!(q.enqueue(pkt(0, 1040), SimTime::ZERO), EnqueueDecision::DroppedOverflow(_)));
        assert_eq!(q.thresh, None);
    }

    fn half_full(mode: EcnMode) -> MsqmQueue {
        let mut q = MsqmQueue::new(RedParams::default(), mode, 50e6, RngStream::new(4, 0));
        q.buf.push(queued(0, 1040, 0.02, 0));
        q.buf.push(queued(1, 160, 0.05, 1));
        q.buf.push(queued(2, 1040, 0.03, 2));
        q.thresh = Some(600.0);
        q.red.idle_since = None;
        q.red.avg = 0.0;
        q
    }

    #[test]
    fn small_arrivals_replace_without_overflow() {
        // The highest stored probability is a packet no bigger than the
        // arrival, so nothing is displaced.
        let mut q = half_full(EcnMode::SmallArrivals);
        assert_eq!(q.enqueue(pkt(9, 160), SimTime::ZERO), EnqueueDecision::Enqueued);
        assert_eq!(q.len_packets(), 4);

        let mut q = half_full(EcnMode::SmallArrivals);
        q.buf.remove(1);
        match q.enqueue(pkt(9, 160), SimTime::ZERO) {
            EnqueueDecision::EnqueuedWithVictim(v) => assert_eq!(v.id, 2),
            other => panic!("unexpected {other:?}"),
        }

        let mut q = half_full(EcnMode::OverflowOrHot);
        q.buf.remove(1);
        assert_eq!(q.enqueue(pkt(9, 160), SimTime::ZERO), EnqueueDecision::Enqueued);
    }

    #[test]
    fn big_arrivals_never_replace() {
        let mut q = half_full(EcnMode::Always);
        assert_eq!(q.enqueue(pkt(9, 1040), SimTime::ZERO), EnqueueDecision::Enqueued);
        assert_eq!(q.len_packets(), 4);
    }
}
