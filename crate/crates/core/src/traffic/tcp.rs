//! Packet-counted TCP NewReno sender with a greedy (always backlogged)
//! application.
//!
//! Sequence numbers count segments. An ACK carries the next sequence number
//! the receiver expects, so `ack = n` covers segments `0..n`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::packet::{ACK_PKT_BYTES, FTP_PKT_BYTES};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TcpConfig {
    pub pkt_bytes: u32,
    pub ack_bytes: u32,
    pub min_rto_s: f64,
    pub initial_rto_s: f64,
    pub max_rto_s: f64,
    pub rwnd_pkts: u32,
    pub initial_cwnd: f64,
    pub initial_ssthresh: f64,
}

impl Default for TcpConfig {
    fn default() -> Self {
        TcpConfig {
            pkt_bytes: FTP_PKT_BYTES,
            ack_bytes: ACK_PKT_BYTES,
            min_rto_s: 0.2,
            initial_rto_s: 1.0,
            max_rto_s: 60.0,
            rwnd_pkts: 10_000,
            initial_cwnd: 1.0,
            initial_ssthresh: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcpPhase {
    SlowStart,
    CongAvoid,
    FastRecovery,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TcpError {
    #[error("flow {flow}: ack {ack} covers data never sent (highest sent {high_water})")]
    AckBeyondSent { flow: u32, ack: u64, high_water: u64 },
}

/// What the sender wants done after an event.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TcpStep {
    /// Segments to put on the wire now, in order.
    pub send: Vec<u64>,
    pub retransmissions: usize,
}

#[derive(Debug, Clone, Copy)]
struct SentInfo {
    at: SimTime,
    retransmitted: bool,
}

#[derive(Debug, Clone)]
pub struct TcpSender {
    pub flow_id: u32,
    pub cfg: TcpConfig,
    pub cwnd: f64,
    pub ssthresh: f64,
    pub phase: TcpPhase,
    /// Next segment to send.
    pub next_seq: u64,
    /// One past the highest segment ever sent.
    pub high_water: u64,
    /// Cumulative ACK point.
    pub highest_acked: u64,
    pub recover_seq: u64,
    pub dup_acks: u32,
    srtt: Option<f64>,
    rttvar: f64,
    pub rto: SimTime,
    timer_deadline: Option<SimTime>,
    timer_gen: u64,
    unacked: BTreeMap<u64, SentInfo>,
}

impl TcpSender {
    pub fn new(flow_id: u32, cfg: TcpConfig) -> Self {
        TcpSender {
            flow_id,
            cwnd: cfg.initial_cwnd.max(1.0),
            ssthresh: cfg.initial_ssthresh.max(2.0),
            phase: TcpPhase::SlowStart,
            next_seq: 0,
            high_water: 0,
            highest_acked: 0,
            recover_seq: 0,
            dup_acks: 0,
            srtt: None,
            rttvar: 0.0,
            rto: SimTime::from_secs_f64(cfg.initial_rto_s),
            timer_deadline: None,
            timer_gen: 0,
            unacked: BTreeMap::new(),
            cfg,
        }
    }

    pub fn in_flight(&self) -> u64 {
        self.next_seq - self.highest_acked
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.srtt.map(SimTime::from_secs_f64)
    }

    /// Current retransmission-timer deadline and its generation. A timer
    /// event whose generation no longer matches is stale.
    pub fn timer(&self) -> (Option<SimTime>, u64) {
        (self.timer_deadline, self.timer_gen)
    }

    pub fn timer_is_current(&self, gen: u64) -> bool {
        self.timer_deadline.is_some() && gen == self.timer_gen
    }

    /// Opens the connection: sends the initial window.
    pub fn start(&mut self, now: SimTime) -> TcpStep {
        let mut step = TcpStep::default();
        self.release(now, &mut step);
        step
    }

    pub fn on_ack(&mut self, ack: u64, now: SimTime) -> Result<TcpStep, TcpError> {
        if ack > self.high_water {
            return Err(TcpError::AckBeyondSent { flow: self.flow_id, ack, high_water: self.high_water });
        }
        let mut step = TcpStep::default();
        if ack > self.highest_acked {
            self.on_new_ack(ack, now, &mut step);
        } else if ack == self.highest_acked && self.high_water > self.highest_acked {
            self.on_dupack(now, &mut step);
        }
        self.release(now, &mut step);
        Ok(step)
    }

    fn on_new_ack(&mut self, ack: u64, now: SimTime, step: &mut TcpStep) {
        let newly = (ack - self.highest_acked) as f64;
        if let Some(info) = self.unacked.get(&(ack - 1)) {
            if !info.retransmitted {
                self.rtt_sample((now - info.at).as_secs_f64());
            }
        }
        self.unacked = self.unacked.split_off(&ack);
        self.highest_acked = ack;
        self.next_seq = self.next_seq.max(ack);
        self.dup_acks = 0;

        match self.phase {
            TcpPhase::FastRecovery if ack >= self.recover_seq => {
                self.cwnd = self.ssthresh;
                self.phase = TcpPhase::CongAvoid;
            }
            TcpPhase::FastRecovery => {
                self.retransmit(ack, now, step);
                self.cwnd = (self.cwnd - newly + 1.0).max(1.0);
            }
            TcpPhase::SlowStart => {
                self.cwnd += 1.0;
                if self.cwnd >= self.ssthresh {
                    self.phase = TcpPhase::CongAvoid;
                }
            }
            TcpPhase::CongAvoid => {
                self.cwnd += 1.0 / self.cwnd;
            }
        }
        self.cwnd = self.cwnd.min(self.cfg.rwnd_pkts as f64);

        if self.high_water > self.highest_acked {
            self.arm_timer(now);
        } else {
            self.timer_deadline = None;
            self.timer_gen += 1;
        }
    }

    fn on_dupack(&mut self, now: SimTime, step: &mut TcpStep) {
        self.dup_acks += 1;
        if self.phase == TcpPhase::FastRecovery {
            self.cwnd += 1.0;
        } else if self.dup_acks == 3 && self.highest_acked >= self.recover_seq {
            self.ssthresh = (self.cwnd / 2.0).floor().max(2.0);
            self.cwnd = self.ssthresh + 3.0;
            self.recover_seq = self.high_water;
            self.phase = TcpPhase::FastRecovery;
            let seq = self.highest_acked;
            self.retransmit(seq, now, step);
        }
    }

    /// Retransmission timer expiry: collapse to one segment and go back to
    /// the cumulative ACK point.
    pub fn on_timeout(&mut self, now: SimTime) -> TcpStep {
        let mut step = TcpStep::default();
        if self.high_water == self.highest_acked {
            self.timer_deadline = None;
            return step;
        }
        self.ssthresh = (self.cwnd / 2.0).floor().max(2.0);
        self.cwnd = 1.0;
        self.phase = TcpPhase::SlowStart;
        self.recover_seq = self.high_water;
        self.dup_acks = 0;
        let max_rto = SimTime::from_secs_f64(self.cfg.max_rto_s);
        self.rto = (self.rto + self.rto).min(max_rto);
        self.next_seq = self.highest_acked;
        self.release(now, &mut step);
        self.arm_timer(now);
        step
    }

    fn rtt_sample(&mut self, r: f64) {
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - r).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * r);
            }
        }
        let rto = (self.srtt.unwrap_or(r) + 4.0 * self.rttvar).clamp(self.cfg.min_rto_s, self.cfg.max_rto_s);
        self.rto = SimTime::from_secs_f64(rto);
    }

    fn arm_timer(&mut self, now: SimTime) {
        self.timer_deadline = Some(now + self.rto);
        self.timer_gen += 1;
    }

    fn retransmit(&mut self, seq: u64, now: SimTime, step: &mut TcpStep) {
        self.unacked.insert(seq, SentInfo { at: now, retransmitted: true });
        step.send.push(seq);
        step.retransmissions += 1;
    }

    /// Sends while the window allows.
    fn release(&mut self, now: SimTime, step: &mut TcpStep) {
        let window = (self.cwnd.floor() as u64).min(self.cfg.rwnd_pkts as u64);
        while self.next_seq < self.highest_acked + window {
            let seq = self.next_seq;
            let resend = seq < self.high_water;
            if resend {
                self.retransmit(seq, now, step);
            } else {
                self.unacked.insert(seq, SentInfo { at: now, retransmitted: false });
                step.send.push(seq);
            }
            self.next_seq += 1;
            self.high_water = self.high_water.max(self.next_seq);
        }
        if self.timer_deadline.is_none() && self.high_water > self.highest_acked {
            self.arm_timer(now);
        }
    }
}
