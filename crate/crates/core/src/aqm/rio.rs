//! RED with In/Out profiles.
//!
//! IN packets are judged against the IN profile using an average of the
//! IN-packet occupancy only; OUT packets against the (lower) OUT profile
//! using an average of the whole queue.

use serde::{Deserialize, Serialize};

use crate::packet::{Packet, TrafficClass};
use crate::rng::RngStream;
use crate::time::SimTime;

use super::{EnqueueDecision, PacketBuffer, QueueDiscipline, RedParams, RedState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RioClassifier {
    pub voip: Profile,
    pub ftp: Profile,
    pub ack: Profile,
}

impl RioClassifier {
    pub fn classify(&self, class: TrafficClass) -> Profile {
        match class {
            TrafficClass::Voip => self.voip,
            TrafficClass::FtpData => self.ftp,
            TrafficClass::TcpAck => self.ack,
        }
    }
}

impl Default for RioClassifier {
    fn default() -> Self {
        RioClassifier { voip: Profile::In, ftp: Profile::Out, ack: Profile::In }
    }
}

#[derive(Debug, Clone)]
pub struct RioQueue {
    pub in_profile: RedState,
    /// Its `avg` is the whole-queue average.
    pub out_profile: RedState,
    pub classifier: RioClassifier,
    buf: PacketBuffer,
    in_bytes: u64,
    rng: RngStream,
}

impl RioQueue {
    /// `out_ratio` scales the IN thresholds down to get the OUT profile; the
    /// buffer is shared and sized by the IN profile.
    pub fn new(in_params: RedParams, out_ratio: f64, classifier: RioClassifier, link_bw_bps: f64, rng: RngStream) -> Self {
        let out_params = in_params.scaled(out_ratio);
        RioQueue {
            in_profile: RedState::new(in_params, link_bw_bps),
            out_profile: RedState::new(out_params, link_bw_bps),
            classifier,
            buf: PacketBuffer::new(),
            in_bytes: 0,
            rng,
        }
    }

    pub fn in_bytes(&self) -> u64 {
        self.in_bytes
    }
}

impl QueueDiscipline for RioQueue {
    fn enqueue(&mut self, mut pkt: Packet, now: SimTime) -> EnqueueDecision {
        let cap = self.in_profile.params.buffer_cap_bytes;
        let profile = self.classifier.classify(pkt.class);
        let size = pkt.size_bytes as u64;

        self.out_profile.update_avg(self.buf.bytes(), now);
        if profile == Profile::In {
            self.in_profile.update_avg(self.in_bytes, now);
        }
        let red = match profile {
            Profile::In => &mut self.in_profile,
            Profile::Out => &mut self.out_profile,
        };

        if size > cap {
            red.on_drop();
            return EnqueueDecision::DroppedOverflow(pkt);
        }
        let p = red.drop_prob(pkt.size_bytes);
        if self.rng.uniform() < p {
            red.on_drop();
            return EnqueueDecision::DroppedProbabilistic(pkt);
        }
        if self.buf.bytes() + size > cap {
            red.on_drop();
            return EnqueueDecision::DroppedOverflow(pkt);
        }
        red.on_accept();
        if profile == Profile::In {
            self.in_bytes += size;
        }
        pkt.enqueued_at = Some(now);
        self.buf.push(pkt);
        EnqueueDecision::Enqueued
    }

    fn dequeue(&mut self, now: SimTime) -> Option<Packet> {
        let pkt = self.buf.pop()?;
        if self.classifier.classify(pkt.class) == Profile::In {
            self.in_bytes -= pkt.size_bytes as u64;
            if self.in_bytes == 0 {
                self.in_profile.mark_idle(now);
            }
        }
        if self.buf.is_empty() {
            self.out_profile.mark_idle(now);
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

    fn queue(seed: u64) -> RioQueue {
        RioQueue::new(RedParams::default(), 0.5, RioClassifier::default(), 50e6, RngStream::new(seed, 0))
    }

    #[test]
    fn out_profile_is_lower() {
        let q = queue(1);
        assert!(q.out_profile.params.min_th_bytes <= q.in_profile.params.min_th_bytes);
        assert!(q.out_profile.params.max_th_bytes <= q.in_profile.params.max_th_bytes);
        assert_eq!(q.out_profile.params.min_th_bytes, 7_500);
    }

    #[test]
    fn voip_below_in_threshold_enqueued() {
        let mut q = queue(1);
        let p = Packet::new(0, TrafficClass::Voip, 160, 0, 0, SimTime::ZERO);
        assert_eq!(q.enqueue(p, SimTime::ZERO), EnqueueDecision::Enqueued);
        assert_eq!(q.in_bytes(), 160);
        q.dequeue(SimTime::ZERO);
        assert_eq!(q.in_bytes(), 0);
    }

    #[test]
    fn ftp_dropped_at_gentle_saturation() {
        let mut q = queue(1);
        q.out_profile.idle_since = None;
        q.out_profile.avg = 2.0 * q.out_profile.params.max_th_bytes as f64 + 1e5;
        assert_eq!(q.out_profile.drop_prob(1040), 1.0);
        let p = Packet::new(0, TrafficClass::FtpData, 1040, 0, 0, SimTime::ZERO);
        assert!(matches!(q.enqueue(p, SimTime::ZERO), EnqueueDecision::DroppedProbabilistic(_)));
    }
}
