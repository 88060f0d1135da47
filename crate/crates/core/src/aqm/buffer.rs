use std::collections::VecDeque;

use crate::packet::Packet;

/// A FIFO of packets that tracks its byte occupancy.
#[derive(Debug, Clone, Default)]
pub struct PacketBuffer {
    pkts: VecDeque<Packet>,
    bytes: u64,
}

impl PacketBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, pkt: Packet) {
        self.bytes += pkt.size_bytes as u64;
        self.pkts.push_back(pkt);
    }

    pub fn pop(&mut self) -> Option<Packet> {
        let pkt = self.pkts.pop_front()?;
        self.bytes -= pkt.size_bytes as u64;
        Some(pkt)
    }

    pub fn remove(&mut self, index: usize) -> Option<Packet> {
        let pkt = self.pkts.remove(index)?;
        self.bytes -= pkt.size_bytes as u64;
        Some(pkt)
    }

    pub fn get(&self, index: usize) -> Option<&Packet> {
        self.pkts.get(index)
    }

    pub fn len(&self) -> usize {
        self.pkts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pkts.is_empty()
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn iter(&self) -> std::collections::vec_deque::Iter<'_, Packet> {
        self.pkts.iter()
    }
}
