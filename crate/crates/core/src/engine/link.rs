use crate::aqm::QueueDiscipline;
use crate::packet::Packet;
use crate::time::SimTime;

use super::NodeId;

/// A unidirectional store-and-forward link fronted by a queue discipline.
pub struct Link {
    pub bandwidth_bps: f64,
    pub prop_delay: SimTime,
    pub to: NodeId,
    pub queue: Box<dyn QueueDiscipline>,
    /// Set while a packet is being serialized.
    pub busy_until: Option<SimTime>,
}

impl Link {
    pub fn new(bandwidth_bps: f64, prop_delay: SimTime, to: NodeId, queue: Box<dyn QueueDiscipline>) -> Self {
        Link { bandwidth_bps, prop_delay, to, queue, busy_until: None }
    }

    pub fn is_busy(&self) -> bool {
        self.busy_until.is_some()
    }

    pub fn serialization(&self, pkt: &Packet) -> SimTime {
        SimTime::serialization(pkt.size_bytes, self.bandwidth_bps)
    }
}

impl std::fmt::Debug for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Link")
            .field("bandwidth_bps", &self.bandwidth_bps)
            .field("prop_delay", &self.prop_delay)
            .field("to", &self.to)
            .field("queued", &self.queue.len_packets())
            .field("busy_until", &self.busy_until)
            .finish()
    }
}
