use crate::packet::Packet;
use crate::time::SimTime;

use super::{EnqueueDecision, PacketBuffer, QueueDiscipline};

/// Plain drop-tail FIFO, optionally bounded in packets.
#[derive(Debug, Clone, Default)]
pub struct FifoQueue {
    buf: PacketBuffer,
    cap_pkts: Option<usize>,
}

impl FifoQueue {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn with_capacity(cap_pkts: usize) -> Self {
        FifoQueue { buf: PacketBuffer::new(), cap_pkts: Some(cap_pkts) }
    }
}

impl QueueDiscipline for FifoQueue {
    fn enqueue(&mut self, pkt: Packet, _now: SimTime) -> EnqueueDecision {
        if self.cap_pkts.is_some_and(|cap| self.buf.len() >= cap) {
            return EnqueueDecision::DroppedOverflow(pkt);
        }
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::TrafficClass;

    fn pkt(id: u64, size: u32) -> Packet {
        Packet::new(id, TrafficClass::FtpData, size, 0, id, SimTime::ZERO)
    }

    #[test]
    fn fifo_order_and_bookkeeping() {
        let mut q = FifoQueue::unbounded();
        assert_eq!(q.dequeue(SimTime::ZERO), None);
        q.enqueue(pkt(1, 1040), SimTime::ZERO);
        q.enqueue(pkt(2, 160), SimTime::ZERO);
        assert_eq!(q.len_bytes(), 1200);
        assert_eq!(q.dequeue(SimTime::ZERO).unwrap().id, 1);
        assert_eq!(q.len_bytes(), 160);
        assert_eq!(q.dequeue(SimTime::ZERO).unwrap().id, 2);
        assert!(q.is_empty());
    }

    #[test]
    fn bounded_tail_drop() {
        let mut q = FifoQueue::with_capacity(1);
        assert!(q.enqueue(pkt(1, 40), SimTime::ZERO).is_enqueued());
        assert!(matches!(q.enqueue(pkt(2, 40), SimTime::ZERO), EnqueueDecision::DroppedOverflow(p) if p.id == 2));
    }
}
