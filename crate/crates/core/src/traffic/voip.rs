//! Pareto ON/OFF constant-bit-rate voice source.

use serde::{Deserialize, Serialize};

use crate::packet::VOIP_PKT_BYTES;
use crate::rng::RngStream;
use crate::time::SimTime;

use super::pareto_sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VoipConfig {
    pub rate_bps: f64,
    pub pkt_bytes: u32,
    pub on_mean_s: f64,
    pub off_mean_s: f64,
    pub shape: f64,
}

impl Default for VoipConfig {
    fn default() -> Self {
        VoipConfig { rate_bps: 78_000.0, pkt_bytes: VOIP_PKT_BYTES, on_mean_s: 1.0, off_mean_s: 1.35, shape: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    On,
    Off,
}

#[derive(Debug, Clone)]
pub struct VoipSource {
    pub flow_id: u32,
    pub cfg: VoipConfig,
    pub phase: Phase,
    pub phase_started_at: SimTime,
    pub phase_ends_at: SimTime,
    /// Emissions so far in the current ON phase.
    emitted_in_phase: u64,
    /// Emissions since the source started; used as the packet sequence.
    pub emitted_total: u64,
    rng: RngStream,
}

impl VoipSource {
    /// A source that starts an ON phase at `start`.
    pub fn new(flow_id: u32, cfg: VoipConfig, mut rng: RngStream, start: SimTime) -> Self {
        let on = SimTime::from_secs_f64(pareto_sample(&mut rng, cfg.shape, cfg.on_mean_s));
        VoipSource {
            flow_id,
            cfg,
            phase: Phase::On,
            phase_started_at: start,
            phase_ends_at: start + on,
            emitted_in_phase: 0,
            emitted_total: 0,
            rng,
        }
    }

    /// Starts in an ON phase of exactly `on`, for tests and replay.
    pub fn with_first_on(flow_id: u32, cfg: VoipConfig, rng: RngStream, start: SimTime, on: SimTime) -> Self {
        let mut s = VoipSource::new(flow_id, cfg, rng, start);
        s.phase_ends_at = start + on;
        s
    }

    /// Offset of the `k`-th emission from the start of an ON phase,
    /// `k * pkt_bytes * 8 / rate`, rounded down to the nanosecond without
    /// accumulating error.
    pub fn emission_offset(&self, k: u64) -> SimTime {
        let bits_ns = k as u128 * self.cfg.pkt_bytes as u128 * 8 * 1_000_000_000;
        let rate = self.cfg.rate_bps.round().max(1.0) as u128;
        SimTime::from_nanos((bits_ns / rate) as u64)
    }

    /// Time of the next emission in the current ON phase, if any.
    fn pending_emission(&self) -> Option<SimTime> {
        if self.phase != Phase::On {
            return None;
        }
        let t = self.phase_started_at + self.emission_offset(self.emitted_in_phase);
        (t <= self.phase_ends_at).then_some(t)
    }

    fn toggle(&mut self) {
        let start = self.phase_ends_at;
        let (phase, mean) = match self.phase {
            Phase::On => (Phase::Off, self.cfg.off_mean_s),
            Phase::Off => (Phase::On, self.cfg.on_mean_s),
        };
        let dur = SimTime::from_secs_f64(pareto_sample(&mut self.rng, self.cfg.shape, mean));
        self.phase = phase;
        self.phase_started_at = start;
        self.phase_ends_at = start + dur;
        self.emitted_in_phase = 0;
    }

    /// Advances to `now`. Returns the emission times (with their sequence
    /// numbers) that fall at or before `now`, and the time the source next
    /// needs to be woken.
    pub fn step(&mut self, now: SimTime) -> (Vec<(SimTime, u64)>, SimTime) {
        let mut out = Vec::new();
        loop {
            if let Some(t) = self.pending_emission() {
                if t <= now {
                    out.push((t, self.emitted_total));
                    self.emitted_in_phase += 1;
                    self.emitted_total += 1;
                    continue;
                }
                return (out, t);
            }
            // Nothing left in this phase.
            if self.phase_ends_at <= now || self.phase == Phase::On {
                self.toggle();
                continue;
            }
            return (out, self.phase_ends_at);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(seed: u64) -> VoipSource {
        VoipSource::new(0, VoipConfig::default(), RngStream::new(seed, 1), SimTime::ZERO)
    }

    #[test]
    fn gap_is_constant() {
        let s = source(1);
        let gap = 160.0 * 8.0 / 78_000.0 * 1e9;
        for k in 1..1000u64 {
            let d = (s.emission_offset(k) - s.emission_offset(k - 1)).as_nanos() as f64;
            assert!((d - gap).abs() <= 1.0, "{d}");
        }
        assert_eq!(s.emission_offset(1).as_nanos(), 16_410_256);
    }

    #[test]
    fn on_phase_of_100ms_emits_seven() {
        // enumerate k * gap <= 0.1 s
        let gap = 160.0 * 8.0 / 78_000.0;
        let oracle = (0..100).take_while(|&k| k as f64 * gap <= 0.1).count();
        assert_eq!(oracle, 7);

        let mut s = VoipSource::with_first_on(0, VoipConfig::default(), RngStream::new(1, 1), SimTime::ZERO, SimTime::from_millis(100));
        let (emits, _) = s.step(SimTime::from_millis(100));
        assert_eq!(emits.len(), oracle);
        assert_eq!(emits[0].0, SimTime::ZERO);
        assert_eq!(s.phase, Phase::Off);
    }

    #[test]
    fn off_phase_is_silent() {
        let mut s = VoipSource::with_first_on(0, VoipConfig::default(), RngStream::new(1, 1), SimTime::ZERO, SimTime::from_millis(1));
        let (emits, wake) = s.step(SimTime::from_millis(1));
        assert_eq!(emits.len(), 1);
        assert_eq!(s.phase, Phase::Off);
        let off_end = s.phase_ends_at;
        assert_eq!(wake, off_end);
        let just_before = off_end.saturating_sub(SimTime::from_nanos(1));
        let (emits, _) = s.step(just_before);
        assert!(emits.is_empty());
    }

    #[test]
    fn long_run_rate_tracks_duty_cycle() {
        let horizon = SimTime::from_secs_f64(300.0);
        let expected = 78_000.0 * 1.0 / (1.0 + 1.35);
        let mut rates = Vec::new();
        for seed in 0..20 {
            let mut s = source(seed);
            let (emits, _) = s.step(horizon);
            rates.push(emits.len() as f64 * 160.0 * 8.0 / 300.0);
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!((mean - expected).abs() / expected < 0.15, "{mean} vs {expected}");
    }

    #[test]
    fn emissions_monotone_and_sequenced() {
        let mut s = source(4);
        let mut last = SimTime::ZERO;
        let mut seq = 0;
        let mut now = SimTime::ZERO;
        for _ in 0..2000 {
            let (emits, wake) = s.step(now);
            for (t, k) in emits {
                assert!(t >= last);
                assert_eq!(k, seq);
                last = t;
                seq += 1;
            }
            assert!(wake > now || wake == now && seq == 0);
            now = wake;
        }
    }
}
