//! Simulated datagrams and traffic classes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Smallest packet the simulator will build: a bare 40-byte header.
pub const HEADER_BYTES: u32 = 40;

pub const VOIP_PKT_BYTES: u32 = 160;
pub const FTP_PKT_BYTES: u32 = 1040;
pub const ACK_PKT_BYTES: u32 = HEADER_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficClass {
    Voip,
    FtpData,
    TcpAck,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 3] = [TrafficClass::Voip, TrafficClass::FtpData, TrafficClass::TcpAck];

    pub fn index(self) -> usize {
        match self {
            TrafficClass::Voip => 0,
            TrafficClass::FtpData => 1,
            TrafficClass::TcpAck => 2,
        }
    }

    /// Data classes travel source → sink through the bottleneck; ACKs go back.
    pub fn is_data(self) -> bool {
        !matches!(self, TrafficClass::TcpAck)
    }
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficClass::Voip => "voip",
            TrafficClass::FtpData => "ftp",
            TrafficClass::TcpAck => "ack",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub class: TrafficClass,
    pub size_bytes: u32,
    pub flow_id: u32,
    /// TCP sequence number (data), cumulative ack number (ACK), or VoIP
    /// emission index.
    pub seq: u64,
    pub created_at: SimTime,
    /// Set when the packet enters the bottleneck queue.
    pub enqueued_at: Option<SimTime>,
    /// Drop probability assigned on admission to an M-SQM queue.
    pub stored_drop_prob: Option<f64>,
}

impl Packet {
    pub fn new(id: u64, class: TrafficClass, size_bytes: u32, flow_id: u32, seq: u64, created_at: SimTime) -> Self {
        debug_assert!(size_bytes >= HEADER_BYTES, "packet below header floor");
        Packet {
            id,
            class,
            size_bytes: size_bytes.max(HEADER_BYTES),
            flow_id,
            seq,
            created_at,
            enqueued_at: None,
            stored_drop_prob: None,
        }
    }
}

/// Hands out run-unique packet ids.
#[derive(Debug, Default)]
pub struct PacketIds {
    next: u64,
}

impl PacketIds {
    pub fn next_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }

    pub fn issued(&self) -> u64 {
        self.next
    }
}
