//! Proportional-integral AQM.
//!
//! The drop probability is adjusted on a fixed-rate timer from the
//! instantaneous queue length (in packets) and its previous sample.

use serde::{Deserialize, Serialize};

use crate::packet::Packet;
use crate::rng::RngStream;
use crate::time::SimTime;

use super::{EnqueueDecision, PacketBuffer, QueueDiscipline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiParams {
    pub a: f64,
    pub b: f64,
    pub q_ref_pkts: u32,
    pub sample_hz: f64,
    pub cap_pkts: u32,
}

impl PiParams {
    pub fn sample_interval(&self) -> SimTime {
        SimTime::from_secs_f64(1.0 / self.sample_hz)
    }
}

impl Default for PiParams {
    fn default() -> Self {
        // ns-2 Queue/PI defaults. The buffer holds the same bytes as the
        // default RED buffer, counted in full-size FTP packets.
        PiParams { a: 1.822e-5, b: 1.816e-5, q_ref_pkts: 50, sample_hz: 170.0, cap_pkts: 115 }
    }
}

#[derive(Debug, Clone)]
pub struct PiQueue {
    pub params: PiParams,
    pub prob: f64,
    pub last_q_pkts: u32,
    buf: PacketBuffer,
    rng: RngStream,
}

impl PiQueue {
    pub fn new(params: PiParams, rng: RngStream) -> Self {
        PiQueue { params, prob: 0.0, last_q_pkts: 0, buf: PacketBuffer::new(), rng }
    }

    /// One controller step with the current queue length `q_now`.
    pub fn update_prob(&mut self, q_now: u32) -> f64 {
        let q_ref = self.params.q_ref_pkts as f64;
        let p = self.prob + self.params.a * (q_now as f64 - q_ref) - self.params.b * (self.last_q_pkts as f64 - q_ref);
        self.prob = p.clamp(0.0, 1.0);
        self.last_q_pkts = q_now;
        self.prob
    }
}

impl QueueDiscipline for PiQueue {
    fn enqueue(&mut self, mut pkt: Packet, now: SimTime) -> EnqueueDecision {
        if self.rng.uniform() < self.prob {
            return EnqueueDecision::DroppedProbabilistic(pkt);
        }
        if self.buf.len() >= self.params.cap_pkts as usize {
            return EnqueueDecision::DroppedOverflow(pkt);
        }
        pkt.enqueued_at = Some(now);
        self.buf.push(pkt);
        EnqueueDecision::Enqueued
    }

    fn dequeue(&mut self, _now: SimTime) -> Option<Packet> {
        self.buf.pop()
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

    fn sample_interval(&self) -> Option<SimTime> {
        Some(self.params.sample_interval())
    }

    fn on_sample(&mut self, _now: SimTime) {
        self.update_prob(self.buf.len() as u32);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::TrafficClass;

    fn pi() -> PiQueue {
        PiQueue::new(PiParams::default(), RngStream::new(5, 0))
    }

    #[test]
    fn controller_substitution() {
        let mut q = pi();
        q.prob = 0.01;
        q.last_q_pkts = 80;
        let p = q.update_prob(100);
        let expected = 0.01 + 1.822e-5 * 50.0 - 1.816e-5 * 30.0;
        assert!((p - expected).abs() <= 1e-12 * expected);
        assert!((p - 0.0103662).abs() < 1e-9);
        assert_eq!(q.last_q_pkts, 100);
    }

    #[test]
    fn equilibrium_and_clamp() {
        let mut q = pi();
        q.prob = 0.2;
        q.last_q_pkts = 50;
        assert_eq!(q.update_prob(50), 0.2);
        q.prob = 0.0;
        q.last_q_pkts = 0;
        assert_eq!(q.update_prob(0), 0.0);
        q.prob = 1.0;
        q.last_q_pkts = 0;
        assert_eq!(q.update_prob(10_000), 1.0);
    }

    #[test]
    fn sample_interval_is_170hz() {
        assert_eq!(pi().sample_interval(), Some(SimTime::from_nanos(5_882_353)));
    }

    #[test]
    fn certain_and_zero_prob() {
        let mut q = pi();
        let p = Packet::new(0, TrafficClass::FtpData, 1040, 0, 0, SimTime::ZERO);
        assert_eq!(q.enqueue(p.clone(), SimTime::ZERO), EnqueueDecision::Enqueued);
        q.prob = 1.0;
        assert!(matches!(q.enqueue(p, SimTime::ZERO), EnqueueDecision::DroppedProbabilistic(_)));
    }

    #[test]
    fn half_prob_drop_fraction() {
        let mut q = pi();
        q.prob = 0.5;
        let n = 100_000;
        let mut dropped = 0;
        for i in 0..n {
            let p = Packet::new(i, TrafficClass::FtpData, 1040, 0, i, SimTime::ZERO);
            match q.enqueue(p, SimTime::ZERO) {
                EnqueueDecision::DroppedProbabilistic(_) => dropped += 1,
                EnqueueDecision::Enqueued => {
                    q.dequeue(SimTime::ZERO);
                }
                other => panic!("{other:?}"),
            }
        }
        let frac = dropped as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }
}
