//! Per-run counters, total link delay across the bottleneck, and CSV output.
//!
//! Total link delay is the sum, over every packet that crossed the
//! bottleneck, of (arrival at the far gateway − enqueue at the near
//! gateway). It is accumulated in integer nanoseconds and converted to
//! seconds once, so identical runs give identical output on any platform.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::aqm::Scheme;
use crate::packet::{Packet, TrafficClass};
use crate::time::SimTime;

pub const CSV_HEADER: &str = "scheme,scenario,varied_flows,seed,duration_s,ftp_sent,ftp_received,voip_sent,voip_received,ftp_dropped,voip_dropped,total_link_delay_s,mean_link_delay_s";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("packet {id} ({class}) delivered across the bottleneck without a recorded enqueue")]
    DeliveryWithoutEnqueue { id: u64, class: TrafficClass },
    #[error("packet {id} delivered at {at} before its enqueue at {enqueued}")]
    DeliveryBeforeEnqueue { id: u64, at: SimTime, enqueued: SimTime },
    #[error("conservation violated:\n{ledger}")]
    Conservation { ledger: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounters {
    pub sent: u64,
    pub received: u64,
    pub dropped_probabilistic: u64,
    pub dropped_overflow: u64,
    pub dropped_victim: u64,
    /// Packets still inside the network when the run stopped.
    pub in_flight: u64,
}

impl ClassCounters {
    pub fn dropped(&self) -> u64 {
        self.dropped_probabilistic + self.dropped_overflow + self.dropped_victim
    }

    pub fn balanced(&self) -> bool {
        self.sent == self.received + self.dropped() + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropKind {
    Probabilistic,
    Overflow,
    Victim,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub scheme: Scheme,
    /// 1 or 2 for sweep cells; `None` for a standalone run.
    pub scenario: Option<u8>,
    pub varied_flows: Option<u32>,
    pub seed: u64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub meta: RunMeta,
    classes: [ClassCounters; 3],
    total_link_delay_ns: u128,
    pub delivered_across_bottleneck: u64,
    pub enqueued_at_bottleneck: u64,
    delay_log: Option<Vec<(SimTime, SimTime)>>,
    finalized: bool,
}

impl MetricsRecord {
    pub fn new(meta: RunMeta) -> Self {
        MetricsRecord {
            meta,
            classes: [ClassCounters::default(); 3],
            total_link_delay_ns: 0,
            delivered_across_bottleneck: 0,
            enqueued_at_bottleneck: 0,
            delay_log: None,
            finalized: false,
        }
    }

    /// Also keep every (enqueue, departure) pair, for post-hoc checks.
    pub fn with_delay_log(mut self) -> Self {
        self.delay_log = Some(Vec::new());
        self
    }

    pub fn class(&self, class: TrafficClass) -> &ClassCounters {
        &self.classes[class.index()]
    }

    fn class_mut(&mut self, class: TrafficClass) -> &mut ClassCounters {
        &mut self.classes[class.index()]
    }

    pub fn record_sent(&mut self, class: TrafficClass) {
        self.class_mut(class).sent += 1;
    }

    pub fn record_received(&mut self, class: TrafficClass) {
        self.class_mut(class).received += 1;
    }

    pub fn record_drop(&mut self, class: TrafficClass, kind: DropKind) {
        let c = self.class_mut(class);
        match kind {
            DropKind::Probabilistic => c.dropped_probabilistic += 1,
            DropKind::Overflow => c.dropped_overflow += 1,
            DropKind::Victim => c.dropped_victim += 1,
        }
    }

    pub fn set_in_flight(&mut self, class: TrafficClass, n: u64) {
        self.class_mut(class).in_flight = n;
    }

    pub fn record_bottleneck_enqueue(&mut self, _pkt: &Packet, _now: SimTime) {
        self.enqueued_at_bottleneck += 1;
    }

    pub fn record_bottleneck_delivery(&mut self, pkt: &Packet, now: SimTime) -> Result<(), MetricsError> {
        let enq = pkt
            .enqueued_at
            .ok_or(MetricsError::DeliveryWithoutEnqueue { id: pkt.id, class: pkt.class })?;
        let span = now
            .checked_sub(enq)
            .ok_or(MetricsError::DeliveryBeforeEnqueue { id: pkt.id, at: now, enqueued: enq })?;
        self.total_link_delay_ns += span.as_nanos() as u128;
        self.delivered_across_bottleneck += 1;
        if let Some(log) = self.delay_log.as_mut() {
            log.push((enq, now));
        }
        Ok(())
    }

    pub fn delay_log(&self) -> Option<&[(SimTime, SimTime)]> {
        self.delay_log.as_deref()
    }

    pub fn total_link_delay_s(&self) -> f64 {
        self.total_link_delay_ns as f64 / 1e9
    }

    pub fn mean_link_delay_s(&self) -> f64 {
        if self.delivered_across_bottleneck == 0 {
            0.0
        } else {
            self.total_link_delay_s() / self.delivered_across_bottleneck as f64
        }
    }

    pub fn ftp(&self) -> &ClassCounters {
        self.class(TrafficClass::FtpData)
    }

    pub fn voip(&self) -> &ClassCounters {
        self.class(TrafficClass::Voip)
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    /// Checks `sent = received + drops + in_flight` for every class.
    pub fn finalize(mut self) -> Result<MetricsRecord, MetricsError> {
        if TrafficClass::ALL.iter().all(|&c| self.class(c).balanced()) {
            self.finalized = true;
            return Ok(self);
        }
        let mut ledger = String::new();
        for class in TrafficClass::ALL {
            let c = self.class(class);
            let accounted = c.received + c.dropped() + c.in_flight;
            let _ = writeln!(
                ledger,
                "  {class}: sent={} received={} dropped(prob={}, overflow={}, victim={}) in_flight={} => off by {}",
                c.sent,
                c.received,
                c.dropped_probabilistic,
                c.dropped_overflow,
                c.dropped_victim,
                c.in_flight,
                c.sent as i128 - accounted as i128
            );
        }
        Err(MetricsError::Conservation { ledger })
    }

    fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<String>| v.unwrap_or_default();
        vec![
            self.meta.scheme.to_string(),
            opt(self.meta.scenario.map(|s| s.to_string())),
            opt(self.meta.varied_flows.map(|s| s.to_string())),
            self.meta.seed.to_string(),
            self.meta.duration_s.to_string(),
            self.ftp().sent.to_string(),
            self.ftp().received.to_string(),
            self.voip().sent.to_string(),
            self.voip().received.to_string(),
            self.ftp().dropped().to_string(),
            self.voip().dropped().to_string(),
            self.total_link_delay_s().to_string(),
            self.mean_link_delay_s().to_string(),
        ]
    }
}

/// Writes the header and one row per record.
pub fn write_csv_to<W: Write>(records: &[MetricsRecord], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()
}

pub fn write_csv(records: &[MetricsRecord], path: &Path) -> Result<(), MetricsError> {
    let io_err = |source| MetricsError::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_csv_to(records, std::io::BufWriter::new(file)).map_err(io_err)
}
