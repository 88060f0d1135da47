//! Queue disciplines.
//!
//! All schemes share one interface: [`QueueDiscipline::enqueue`] decides the
//! fate of an arriving packet, [`QueueDiscipline::dequeue`] hands the
//! head-of-line packet to the link. Service order is FIFO everywhere; the
//! schemes differ only in admission.

mod buffer;
mod fifo;
mod msqm;
mod pi;
mod red;
mod rio;

use serde::{Deserialize, Serialize};

use crate::packet::Packet;
use crate::time::SimTime;

pub use buffer::PacketBuffer;
pub use fifo::FifoQueue;
pub use msqm::{msqm_drop_prob, select_victim, update_threshold, EcnMode, MsqmQueue, MSQM_ALPHA};
pub use pi::{PiParams, PiQueue};
pub use red::{RedParams, RedQueue, RedState};
pub use rio::{Profile, RioClassifier, RioQueue};

/// Outcome of offering a packet to a queue. Dropped packets are handed back
/// so the caller can account for them.
#[derive(Debug, Clone, PartialEq)]
pub enum EnqueueDecision {
    Enqueued,
    DroppedProbabilistic(Packet),
    DroppedOverflow(Packet),
    /// The arrival was admitted by evicting `victim`. Only M-SQM does this.
    EnqueuedWithVictim(Packet),
}

impl EnqueueDecision {
    pub fn is_enqueued(&self) -> bool {
        matches!(self, EnqueueDecision::Enqueued | EnqueueDecision::EnqueuedWithVictim(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Msqm,
    Red,
    Rio,
    Pi,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Msqm, Scheme::Red, Scheme::Rio, Scheme::Pi];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Msqm => "msqm",
            Scheme::Red => "red",
            Scheme::Rio => "rio",
            Scheme::Pi => "pi",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "msqm" | "m-sqm" => Ok(Scheme::Msqm),
            "red" => Ok(Scheme::Red),
            "rio" => Ok(Scheme::Rio),
            "pi" => Ok(Scheme::Pi),
            other => Err(format!("unknown scheme `{other}` (expected msqm, red, rio or pi)")),
        }
    }
}

pub trait QueueDiscipline: Send {
    fn enqueue(&mut self, pkt: Packet, now: SimTime) -> EnqueueDecision;

    fn dequeue(&mut self, now: SimTime) -> Option<Packet>;

    fn len_packets(&self) -> usize;

    fn len_bytes(&self) -> u64;

    fn is_empty(&self) -> bool {
        self.len_packets() == 0
    }

    /// Packets currently held, head first.
    fn iter(&self) -> Box<dyn Iterator<Item = &Packet> + '_>;

    /// Period of the control timer, for disciplines that need one.
    fn sample_interval(&self) -> Option<SimTime> {
        None
    }

    fn on_sample(&mut self, _now: SimTime) {}
}
