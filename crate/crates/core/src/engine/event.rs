use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::packet::Packet;
use crate::time::SimTime;

use super::{LinkId, NodeId, SimError};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A VoIP source is due to emit or change phase.
    SourceTimer { flow: u32 },
    LinkTxComplete { link: LinkId },
    PacketArrival { node: NodeId, pkt: Packet },
    RtoTimer { flow: u32, gen: u64 },
    PiSample,
    SimEnd,
}

impl EventKind {
    pub fn tag(&self) -> u8 {
        match self {
            EventKind::SourceTimer { .. } => 0,
            EventKind::LinkTxComplete { .. } => 1,
            EventKind::PacketArrival { .. } => 2,
            EventKind::RtoTimer { .. } => 3,
            EventKind::PiSample => 4,
            EventKind::SimEnd => 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event {
    pub at: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (at, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

/// Pending events ordered by time, then by insertion order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    now: SimTime,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn schedule(&mut self, at: SimTime, kind: EventKind) -> Result<(), SimError> {
        if at < self.now {
            return Err(SimError::ScheduleInPast { at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { at, seq, kind });
        Ok(())
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.at)
    }

    /// Removes the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event> {
        let ev = self.heap.pop()?;
        debug_assert!(ev.at >= self.now);
        self.now = ev.at;
        Some(ev)
    }

    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.heap.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ns: u64) -> SimTime {
        SimTime::from_nanos(ns)
    }

    #[test]
    fn pops_in_time_order() {
        let mut q = EventQueue::new();
        q.schedule(t(5), EventKind::PiSample).unwrap();
        q.schedule(t(3), EventKind::SimEnd).unwrap();
        assert_eq!(q.pop().unwrap().at, t(3));
        assert_eq!(q.pop().unwrap().at, t(5));
        assert!(q.pop().is_none());
    }

    #[test]
    fn ties_pop_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(t(5), EventKind::SourceTimer { flow: 1 }).unwrap();
        q.schedule(t(5), EventKind::SourceTimer { flow: 2 }).unwrap();
        assert_eq!(q.pop().unwrap().kind, EventKind::SourceTimer { flow: 1 });
        assert_eq!(q.pop().unwrap().kind, EventKind::SourceTimer { flow: 2 });
    }

    #[test]
    fn past_is_rejected() {
        let mut q = EventQueue::new();
        q.schedule(t(10), EventKind::PiSample).unwrap();
        q.pop();
        assert!(matches!(q.schedule(t(9), EventKind::PiSample), Err(SimError::ScheduleInPast { .. })));
        assert!(q.schedule(t(10), EventKind::PiSample).is_ok());
    }
}
