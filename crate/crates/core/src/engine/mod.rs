//! Discrete-event core: event queue, store-and-forward links, and the
//! dumbbell topology.

mod dumbbell;
mod event;
mod link;

use std::fmt;

use thiserror::Error;

use crate::metrics::MetricsError;
use crate::packet::TrafficClass;
use crate::time::SimTime;
use crate::traffic::TcpError;

pub use dumbbell::{AqmParams, DumbbellConfig, Simulation, TraceEntry};
pub use event::{Event, EventKind, EventQueue};
pub use link::Link;

pub type LinkId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeId {
    Source(u32),
    G1,
    G2,
    Sink(u32),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Source(i) => write!(f, "source{i}"),
            NodeId::G1 => f.write_str("G1"),
            NodeId::G2 => f.write_str("G2"),
            NodeId::Sink(i) => write!(f, "sink{i}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled at {at}, before the current time {now}")]
    ScheduleInPast { at: SimTime, now: SimTime },
    #[error("{node} cannot route packet {id} ({class}, flow {flow})")]
    Unroutable { node: NodeId, id: u64, class: TrafficClass, flow: u32 },
    #[error("invalid dumbbell configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Tcp(#[from] TcpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
