//! The dumbbell: N sources → G1 → bottleneck → G2 → N sinks, with ACKs
//! returning over a separate uncongested G2 → G1 link.

use log::debug;

use crate::aqm::{
    EcnMode, EnqueueDecision, FifoQueue, MsqmQueue, PiParams, PiQueue, QueueDiscipline, RedParams, RedQueue,
    RioClassifier, RioQueue, Scheme,
};
use crate::metrics::{DropKind, MetricsRecord, RunMeta};
use crate::packet::{Packet, PacketIds, TrafficClass};
use crate::rng::{voip_stream, RngStream, AQM_STREAM};
use crate::time::SimTime;
use crate::traffic::{TcpConfig, TcpSender, TcpSink, TcpStep, VoipConfig, VoipSource};

use super::{EventKind, EventQueue, Link, LinkId, NodeId, SimError};

/// Parameters for every scheme; only the selected one is used.
#[derive(Debug, Clone, PartialEq)]
pub struct AqmParams {
    pub red: RedParams,
    pub ecn_mode: EcnMode,
    /// OUT-profile thresholds as a fraction of the IN profile's.
    pub rio_out_ratio: f64,
    pub rio_classifier: RioClassifier,
    pub pi: PiParams,
}

impl Default for AqmParams {
    fn default() -> Self {
        AqmParams {
            red: RedParams::default(),
            ecn_mode: EcnMode::default(),
            rio_out_ratio: 0.5,
            rio_classifier: RioClassifier::default(),
            pi: PiParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumbbellConfig {
    pub n_ftp: u32,
    pub n_voip: u32,
    pub access_bw_bps: f64,
    pub access_delay: SimTime,
    pub bottleneck_bw_bps: f64,
    pub bottleneck_delay: SimTime,
    pub scheme: Scheme,
    pub aqm: AqmParams,
    pub voip: VoipConfig,
    pub tcp: TcpConfig,
    pub duration: SimTime,
    pub seed: u64,
    /// Keep every bottleneck (enqueue, departure) pair in the metrics.
    pub record_delays: bool,
    /// Keep a transmission trace (memory grows with traffic).
    pub record_trace: bool,
}

impl DumbbellConfig {
    pub fn new(scheme: Scheme, n_ftp: u32, n_voip: u32) -> Self {
        DumbbellConfig {
            n_ftp,
            n_voip,
            access_bw_bps: 10e6,
            access_delay: SimTime::from_millis(1),
            bottleneck_bw_bps: 50e6,
            bottleneck_delay: SimTime::from_millis(10),
            scheme,
            aqm: AqmParams::default(),
            voip: VoipConfig::default(),
            tcp: TcpConfig::default(),
            duration: SimTime::from_secs_f64(60.0),
            seed: 1,
            record_delays: false,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.access_bw_bps) || !positive(self.bottleneck_bw_bps) {
            return bad("bandwidths must be positive".into());
        }
        if self.duration == SimTime::ZERO {
            return bad("duration must be positive".into());
        }
        let red = &self.aqm.red;
        if !(red.q_weight > 0.0 && red.q_weight <= 1.0) {
            return bad(format!("red.q_weight {} outside (0, 1]", red.q_weight));
        }
        if !(red.max_p > 0.0 && red.max_p <= 1.0) {
            return bad(format!("red.max_p {} outside (0, 1]", red.max_p));
        }
        if red.min_th_bytes == 0 || red.min_th_bytes >= red.max_th_bytes || red.max_th_bytes > red.buffer_cap_bytes {
            return bad("red thresholds must satisfy 0 < min_th < max_th <= buffer".into());
        }
        if red.mean_pkt_bytes == 0 {
            return bad("red.mean_pkt_bytes must be positive".into());
        }
        if !(self.aqm.rio_out_ratio > 0.0 && self.aqm.rio_out_ratio <= 1.0) {
            return bad(format!("rio out ratio {} outside (0, 1]", self.aqm.rio_out_ratio));
        }
        let pi = &self.aqm.pi;
        if !positive(pi.sample_hz) || pi.cap_pkts == 0 || !pi.a.is_finite() || !pi.b.is_finite() {
            return bad("pi needs a positive sample rate and capacity".into());
        }
        let v = &self.voip;
        if !(v.shape > 1.0) || !positive(v.on_mean_s) || !positive(v.off_mean_s) || !positive(v.rate_bps) {
            return bad("voip needs shape > 1 and positive means and rate".into());
        }
        let t = &self.tcp;
        if v.pkt_bytes < crate::packet::HEADER_BYTES
            || t.pkt_bytes < crate::packet::HEADER_BYTES
            || t.ack_bytes < crate::packet::HEADER_BYTES
        {
            return bad("packet sizes must be at least the 40-byte header".into());
        }
        if !positive(t.min_rto_s) || t.max_rto_s < t.min_rto_s || t.rwnd_pkts == 0 || !(t.initial_cwnd >= 1.0) {
            return bad("tcp timers and windows must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEntry {
    TxStart { link: LinkId, pkt_id: u64, at: SimTime, done: SimTime, arrives: SimTime },
    TxComplete { link: LinkId, at: SimTime, queued_after: usize },
    Arrival { node: NodeId, pkt_id: u64, at: SimTime },
}

enum FlowKind {
    Ftp { sender: TcpSender, sink: TcpSink, scheduled_gen: Option<u64> },
    Voip { source: VoipSource },
}

struct Flow {
    kind: FlowKind,
    src_up: LinkId,
    src_down: Option<LinkId>,
    sink_down: LinkId,
    sink_up: Option<LinkId>,
}

pub struct Simulation {
    cfg: DumbbellConfig,
    events: EventQueue,
    links: Vec<Link>,
    flows: Vec<Flow>,
    bottleneck: LinkId,
    reverse: LinkId,
    metrics: MetricsRecord,
    ids: PacketIds,
    digest: u64,
    events_processed: u64,
    trace: Option<Vec<TraceEntry>>,
    ended: bool,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(mut h: u64, v: u64) -> u64 {
    for b in v.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl Simulation {
    pub fn build(cfg: DumbbellConfig) -> Result<Simulation, SimError> {
        cfg.validate()?;
        let bw = cfg.bottleneck_bw_bps;
        let aqm_rng = RngStream::new(cfg.seed, AQM_STREAM);
        let aqm: Box<dyn QueueDiscipline> = match cfg.scheme {
            Scheme::Msqm => Box::new(MsqmQueue::new(cfg.aqm.red.clone(), cfg.aqm.ecn_mode, bw, aqm_rng)),
            Scheme::Red => Box::new(RedQueue::new(cfg.aqm.red.clone(), bw, aqm_rng)),
            Scheme::Rio => Box::new(RioQueue::new(
                cfg.aqm.red.clone(),
                cfg.aqm.rio_out_ratio,
                cfg.aqm.rio_classifier,
                bw,
                aqm_rng,
            )),
            Scheme::Pi => Box::new(PiQueue::new(cfg.aqm.pi.clone(), aqm_rng)),
        };
        let pi_interval = aqm.sample_interval();

        let mut links = vec![
            Link::new(bw, cfg.bottleneck_delay, NodeId::G2, aqm),
            Link::new(bw, cfg.bottleneck_delay, NodeId::G1, Box::new(FifoQueue::unbounded())),
        ];
        let mut add_link = |to: NodeId| {
            links.push(Link::new(cfg.access_bw_bps, cfg.access_delay, to, Box::new(FifoQueue::unbounded())));
            links.len() - 1
        };

        let mut flows = Vec::with_capacity((cfg.n_ftp + cfg.n_voip) as usize);
        for f in 0..cfg.n_ftp + cfg.n_voip {
            let is_ftp = f < cfg.n_ftp;
            let src_up = add_link(NodeId::G1);
            let sink_down = add_link(NodeId::Sink(f));
            let (kind, src_down, sink_up) = if is_ftp {
                let kind = FlowKind::Ftp {
                    sender: TcpSender::new(f, cfg.tcp.clone()),
                    sink: TcpSink::new(),
                    scheduled_gen: None,
                };
                (kind, Some(add_link(NodeId::Source(f))), Some(add_link(NodeId::G2)))
            } else {
                let rng = RngStream::new(cfg.seed, voip_stream(f));
                let source = VoipSource::new(f, cfg.voip.clone(), rng, SimTime::ZERO);
                (FlowKind::Voip { source }, None, None)
            };
            flows.push(Flow { kind, src_up, src_down, sink_down, sink_up });
        }

        let meta = RunMeta {
            scheme: cfg.scheme,
            scenario: None,
            varied_flows: None,
            seed: cfg.seed,
            duration_s: cfg.duration.as_secs_f64(),
        };
        let mut metrics = MetricsRecord::new(meta);
        if cfg.record_delays {
            metrics = metrics.with_delay_log();
        }

        let mut events = EventQueue::new();
        for f in 0..flows.len() as u32 {
            events.schedule(SimTime::ZERO, EventKind::SourceTimer { flow: f })?;
        }
        if let Some(iv) = pi_interval {
            events.schedule(iv, EventKind::PiSample)?;
        }
        events.schedule(cfg.duration, EventKind::SimEnd)?;

        debug!(
            "built dumbbell: scheme={} ftp={} voip={} links={} seed={}",
            cfg.scheme,
            cfg.n_ftp,
            cfg.n_voip,
            links.len(),
            cfg.seed
        );

        Ok(Simulation {
            trace: cfg.record_trace.then(Vec::new),
            cfg,
            events,
            links,
            flows,
            bottleneck: 0,
            reverse: 1,
            metrics,
            ids: PacketIds::default(),
            digest: FNV_OFFSET,
            events_processed: 0,
            ended: false,
        })
    }

    /// Builds, runs to the configured duration and returns checked metrics.
    pub fn run(cfg: DumbbellConfig) -> Result<MetricsRecord, SimError> {
        let duration = cfg.duration;
        let mut sim = Simulation::build(cfg)?;
        sim.run_until(duration)?;
        sim.finish()
    }

    pub fn now(&self) -> SimTime {
        self.events.now()
    }

    pub fn config(&self) -> &DumbbellConfig {
        &self.cfg
    }

    pub fn metrics(&self) -> &MetricsRecord {
        &self.metrics
    }

    pub fn bottleneck(&self) -> &Link {
        &self.links[self.bottleneck]
    }

    pub fn bottleneck_id(&self) -> LinkId {
        self.bottleneck
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    /// FNV-1a digest over every processed event's time, sequence and kind.
    pub fn trace_digest(&self) -> u64 {
        self.digest
    }

    pub fn events_processed(&self) -> u64 {
        self.events_processed
    }

    pub fn packets_created(&self) -> u64 {
        self.ids.issued()
    }

    /// Processes events up to and including `t_end` (or until the end
    /// marker), then parks the clock at `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<(), SimError> {
        while !self.ended {
            match self.events.peek_time() {
                Some(t) if t <= t_end => {}
                _ => break,
            }
            let ev = self.events.pop().expect("peeked");
            self.events_processed += 1;
            let mut h = fnv(self.digest, ev.at.as_nanos());
            h = fnv(h, ev.seq);
            h = fnv(h, ev.kind.tag() as u64);
            if let EventKind::PacketArrival { pkt, .. } = &ev.kind {
                h = fnv(h, pkt.id);
            }
            self.digest = h;
            self.handle(ev.kind)?;
        }
        self.events.advance_to(t_end);
        Ok(())
    }

    fn handle(&mut self, kind: EventKind) -> Result<(), SimError> {
        let now = self.events.now();
        match kind {
            EventKind::SourceTimer { flow } => self.on_source_timer(flow),
            EventKind::LinkTxComplete { link } => {
                self.links[link].busy_until = None;
                if let Some(tr) = self.trace.as_mut() {
                    tr.push(TraceEntry::TxComplete { link, at: now, queued_after: self.links[link].queue.len_packets() });
                }
                self.start_tx(link)
            }
            EventKind::PacketArrival { node, pkt } => {
                if let Some(tr) = self.trace.as_mut() {
                    tr.push(TraceEntry::Arrival { node, pkt_id: pkt.id, at: now });
                }
                self.node_forward(node, pkt)
            }
            EventKind::RtoTimer { flow, gen } => self.on_rto(flow, gen),
            EventKind::PiSample => {
                let link = &mut self.links[self.bottleneck];
                link.queue.on_sample(now);
                if let Some(iv) = link.queue.sample_interval() {
                    let next = now + iv;
                    if next <= self.cfg.duration {
                        self.events.schedule(next, EventKind::PiSample)?;
                    }
                }
                Ok(())
            }
            EventKind::SimEnd => {
                self.ended = true;
                Ok(())
            }
        }
    }

    fn on_source_timer(&mut self, f: u32) -> Result<(), SimError> {
        let now = self.events.now();
        let flow = &mut self.flows[f as usize];
        match &mut flow.kind {
            FlowKind::Ftp { sender, .. } => {
                let step = sender.start(now);
                self.emit_ftp(f, step)
            }
            FlowKind::Voip { source } => {
                let (emits, wake) = source.step(now);
                let src_up = flow.src_up;
                let size = self.cfg.voip.pkt_bytes;
                for (t, seq) in emits {
                    let pkt = Packet::new(self.ids.next_id(), TrafficClass::Voip, size, f, seq, t);
                    self.metrics.record_sent(TrafficClass::Voip);
                    self.send(src_up, pkt)?;
                }
                if wake <= self.cfg.duration {
                    self.events.schedule(wake, EventKind::SourceTimer { flow: f })?;
                }
                Ok(())
            }
        }
    }

    fn on_rto(&mut self, f: u32, gen: u64) -> Result<(), SimError> {
        let now = self.events.now();
        let step = match &mut self.flows[f as usize].kind {
            FlowKind::Ftp { sender, .. } if sender.timer_is_current(gen) => sender.on_timeout(now),
            _ => return Ok(()),
        };
        self.emit_ftp(f, step)
    }

    /// Puts the sender's segments on the wire and re-arms its timer.
    fn emit_ftp(&mut self, f: u32, step: TcpStep) -> Result<(), SimError> {
        let now = self.events.now();
        let src_up = self.flows[f as usize].src_up;
        let size = self.cfg.tcp.pkt_bytes;
        for seq in step.send {
            let pkt = Packet::new(self.ids.next_id(), TrafficClass::FtpData, size, f, seq, now);
            self.metrics.record_sent(TrafficClass::FtpData);
            self.send(src_up, pkt)?;
        }
        if let FlowKind::Ftp { sender, scheduled_gen, .. } = &mut self.flows[f as usize].kind {
            let (deadline, gen) = sender.timer();
            if let Some(d) = deadline {
                if *scheduled_gen != Some(gen) {
                    *scheduled_gen = Some(gen);
                    self.events.schedule(d, EventKind::RtoTimer { flow: f, gen })?;
                }
            }
        }
        Ok(())
    }

    fn send(&mut self, link: LinkId, pkt: Packet) -> Result<(), SimError> {
        let now = self.events.now();
        let at_bottleneck = link == self.bottleneck;
        let probe = at_bottleneck.then(|| pkt.clone());
        match self.links[link].queue.enqueue(pkt, now) {
            EnqueueDecision::Enqueued => {
                if let Some(p) = &probe {
                    self.metrics.record_bottleneck_enqueue(p, now);
                }
            }
            EnqueueDecision::EnqueuedWithVictim(victim) => {
                if let Some(p) = &probe {
                    self.metrics.record_bottleneck_enqueue(p, now);
                }
                self.metrics.record_drop(victim.class, DropKind::Victim);
            }
            EnqueueDecision::DroppedProbabilistic(p) => self.metrics.record_drop(p.class, DropKind::Probabilistic),
            EnqueueDecision::DroppedOverflow(p) => self.metrics.record_drop(p.class, DropKind::Overflow),
        }
        if !self.links[link].is_busy() {
            self.start_tx(link)?;
        }
        Ok(())
    }

    fn start_tx(&mut self, id: LinkId) -> Result<(), SimError> {
        let now = self.events.now();
        let link = &mut self.links[id];
        let Some(pkt) = link.queue.dequeue(now) else {
            return Ok(());
        };
        let done = now + link.serialization(&pkt);
        let arrives = done + link.prop_delay;
        link.busy_until = Some(done);
        let to = link.to;
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TraceEntry::TxStart { link: id, pkt_id: pkt.id, at: now, done, arrives });
        }
        self.events.schedule(done, EventKind::LinkTxComplete { link: id })?;
        self.events.schedule(arrives, EventKind::PacketArrival { node: to, pkt })
    }

    fn unroutable(node: NodeId, pkt: &Packet) -> SimError {
        SimError::Unroutable { node, id: pkt.id, class: pkt.class, flow: pkt.flow_id }
    }

    fn node_forward(&mut self, node: NodeId, pkt: Packet) -> Result<(), SimError> {
        let now = self.events.now();
        let Some(flow) = self.flows.get(pkt.flow_id as usize) else {
            return Err(Self::unroutable(node, &pkt));
        };
        match node {
            NodeId::G1 => {
                let next = if pkt.class.is_data() { Some(self.bottleneck) } else { flow.src_down };
                let next = next.ok_or_else(|| Self::unroutable(node, &pkt))?;
                self.send(next, pkt)
            }
            NodeId::G2 => {
                if pkt.class.is_data() {
                    let next = flow.sink_down;
                    self.metrics.record_bottleneck_delivery(&pkt, now)?;
                    self.send(next, pkt)
                } else {
                    self.send(self.reverse, pkt)
                }
            }
            NodeId::Sink(f) => {
                if f != pkt.flow_id || !pkt.class.is_data() {
                    return Err(Self::unroutable(node, &pkt));
                }
                self.metrics.record_received(pkt.class);
                let sink_up = flow.sink_up;
                if let FlowKind::Ftp { sink, .. } = &mut self.flows[f as usize].kind {
                    let ack = sink.on_data(pkt.seq);
                    let sink_up = sink_up.ok_or_else(|| Self::unroutable(node, &pkt))?;
                    let ack_pkt = Packet::new(self.ids.next_id(), TrafficClass::TcpAck, self.cfg.tcp.ack_bytes, f, ack, now);
                    self.metrics.record_sent(TrafficClass::TcpAck);
                    self.send(sink_up, ack_pkt)?;
                }
                Ok(())
            }
            NodeId::Source(f) => {
                if f != pkt.flow_id || pkt.class != TrafficClass::TcpAck {
                    return Err(Self::unroutable(node, &pkt));
                }
                self.metrics.record_received(TrafficClass::TcpAck);
                let step = match &mut self.flows[f as usize].kind {
                    FlowKind::Ftp { sender, .. } => sender.on_ack(pkt.seq, now)?,
                    FlowKind::Voip { .. } => return Err(Self::unroutable(node, &pkt)),
                };
                self.emit_ftp(f, step)
            }
        }
    }

    /// Packets currently queued or on the wire, per class.
    pub fn in_flight(&self) -> [u64; 3] {
        let mut counts = [0u64; 3];
        for link in &self.links {
            for p in link.queue.iter() {
                counts[p.class.index()] += 1;
            }
        }
        for ev in self.events.iter() {
            if let EventKind::PacketArrival { pkt, .. } = &ev.kind {
                counts[pkt.class.index()] += 1;
            }
        }
        counts
    }

    /// Data packets past G2 that have not reached their sink yet.
    pub fn data_in_flight_after_bottleneck(&self) -> u64 {
        let queued: u64 = self
            .flows
            .iter()
            .map(|f| self.links[f.sink_down].queue.len_packets() as u64)
            .sum();
        let on_wire = self
            .events
            .iter()
            .filter(|ev| matches!(&ev.kind, EventKind::PacketArrival { node: NodeId::Sink(_), .. }))
            .count() as u64;
        queued + on_wire
    }

    /// Snapshots in-flight packets into the ledger and checks conservation.
    pub fn finish(mut self) -> Result<MetricsRecord, SimError> {
        let counts = self.in_flight();
        for class in TrafficClass::ALL {
            self.metrics.set_in_flight(class, counts[class.index()]);
        }
        debug!(
            "run finished at {}: {} events, {} packets",
            self.events.now(),
            self.events_processed,
            self.ids.issued()
        );
        Ok(self.metrics.finalize()?)
    }
}
