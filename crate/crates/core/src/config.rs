//! Run configuration: a strict TOML document.
//!
//! Only `scheme` is required. Every other key has a default; unknown keys
//! are rejected so a typo cannot silently fall back to a default. See
//! `book/src/configuration.md` for the full schema.

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aqm::{EcnMode, PiParams, RedParams, RioClassifier, Scheme};
use crate::engine::{AqmParams, DumbbellConfig, SimError, Simulation};
use crate::metrics::MetricsRecord;
use crate::time::SimTime;
use crate::traffic::{TcpConfig, VoipConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub n_ftp: u32,
    pub n_voip: u32,
    pub access_bw_bps: f64,
    pub access_delay_s: f64,
    pub bottleneck_bw_bps: f64,
    pub bottleneck_delay_s: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            n_ftp: 100,
            n_voip: 0,
            access_bw_bps: 10e6,
            access_delay_s: 0.001,
            bottleneck_bw_bps: 50e6,
            bottleneck_delay_s: 0.010,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RedConfig {
    pub q_weight: f64,
    pub max_p: f64,
    pub min_th_bytes: u64,
    /// Defaults to three times `min_th_bytes`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_th_bytes: Option<u64>,
    /// Defaults to eight times `min_th_bytes`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buffer_bytes: Option<u64>,
    pub gentle: bool,
    pub byte_mode: bool,
    pub mean_pkt_bytes: u32,
}

impl Default for RedConfig {
    fn default() -> Self {
        let p = RedParams::default();
        RedConfig {
            q_weight: p.q_weight,
            max_p: p.max_p,
            min_th_bytes: p.min_th_bytes,
            max_th_bytes: None,
            buffer_bytes: None,
            gentle: p.gentle,
            byte_mode: p.byte_mode,
            mean_pkt_bytes: p.mean_pkt_bytes,
        }
    }
}

impl RedConfig {
    pub fn params(&self) -> RedParams {
        let mut p = RedParams::from_min_threshold(self.min_th_bytes, self.q_weight, self.max_p, self.mean_pkt_bytes);
        if let Some(m) = self.max_th_bytes {
            p.max_th_bytes = m;
        }
        if let Some(b) = self.buffer_bytes {
            p.buffer_cap_bytes = b;
        }
        p.gentle = self.gentle;
        p.byte_mode = self.byte_mode;
        p
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MsqmConfig {
    pub ecn_mode: EcnMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RioConfig {
    pub out_threshold_ratio: f64,
    pub classifier: RioClassifier,
}

impl Default for RioConfig {
    fn default() -> Self {
        RioConfig { out_threshold_ratio: 0.5, classifier: RioClassifier::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Keep every per-packet bottleneck delay (memory grows with traffic).
    pub record_delays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    pub seed: u64,
    pub duration_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    pub topology: TopologyConfig,
    pub red: RedConfig,
    pub msqm: MsqmConfig,
    pub rio: RioConfig,
    pub pi: PiParams,
    pub voip: VoipConfig,
    pub tcp: TcpConfig,
    pub metrics: MetricsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: None,
            seed: 1,
            duration_s: 60.0,
            out: None,
            topology: TopologyConfig::default(),
            red: RedConfig::default(),
            msqm: MsqmConfig::default(),
            rio: RioConfig::default(),
            pi: PiParams::default(),
            voip: VoipConfig::default(),
            tcp: TcpConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

/// Parses and validates a config document; `scheme` must be present.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg = parse_partial(text)?;
    if cfg.scheme.is_none() {
        return Err(ConfigError::Missing("scheme"));
    }
    Ok(cfg)
}

/// Like [`parse_config`] but `scheme` may be omitted (sweeps pick it).
pub fn parse_partial(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    log_defaults(&table);
    cfg.validate()?;
    Ok(cfg)
}

fn log_defaults(given: &toml::Table) {
    if !log::log_enabled!(log::Level::Debug) {
        return;
    }
    let Ok(toml::Value::Table(defaults)) = toml::Value::try_from(RunConfig::default()) else {
        return;
    };
    fn walk(prefix: &str, defaults: &toml::Table, given: Option<&toml::Table>) {
        for (k, v) in defaults {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            let g = given.and_then(|t| t.get(k));
            match v {
                toml::Value::Table(sub) => walk(&key, sub, g.and_then(|x| x.as_table())),
                _ if g.is_none() => debug!("default applied: {key} = {v}"),
                _ => {}
            }
        }
    }
    walk("", &defaults, Some(given));
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("{v} must be positive")))
            }
        };
        pos("duration_s", self.duration_s)?;
        let t = &self.topology;
        pos("topology.access_bw_bps", t.access_bw_bps)?;
        pos("topology.bottleneck_bw_bps", t.bottleneck_bw_bps)?;
        if !(t.access_delay_s >= 0.0) {
            return Err(invalid("topology.access_delay_s", "must be non-negative"));
        }
        if !(t.bottleneck_delay_s >= 0.0) {
            return Err(invalid("topology.bottleneck_delay_s", "must be non-negative"));
        }

        let r = &self.red;
        if !(r.q_weight > 0.0 && r.q_weight <= 1.0) {
            return Err(invalid("red.q_weight", "must lie in (0, 1]"));
        }
        if !(r.max_p > 0.0 && r.max_p <= 1.0) {
            return Err(invalid("red.max_p", "must lie in (0, 1]"));
        }
        if r.min_th_bytes == 0 {
            return Err(invalid("red.min_th_bytes", "must be positive"));
        }
        if r.mean_pkt_bytes == 0 {
            return Err(invalid("red.mean_pkt_bytes", "must be positive"));
        }
        let p = r.params();
        if p.max_th_bytes <= p.min_th_bytes {
            return Err(invalid("red.max_th_bytes", "must exceed min_th_bytes"));
        }
        if p.buffer_cap_bytes < p.max_th_bytes {
            return Err(invalid("red.buffer_bytes", "must be at least max_th_bytes"));
        }

        if !(self.rio.out_threshold_ratio > 0.0 && self.rio.out_threshold_ratio <= 1.0) {
            return Err(invalid("rio.out_threshold_ratio", "must lie in (0, 1] so OUT drops no later than IN"));
        }
        pos("pi.sample_hz", self.pi.sample_hz)?;
        if self.pi.cap_pkts == 0 {
            return Err(invalid("pi.cap_pkts", "must be positive"));
        }
        if !self.pi.a.is_finite() || !self.pi.b.is_finite() {
            return Err(invalid("pi.a", "gains must be finite"));
        }

        let v = &self.voip;
        if !(v.shape > 1.0) {
            return Err(invalid("voip.shape", "must exceed 1 (the Pareto mean is undefined otherwise)"));
        }
        pos("voip.on_mean_s", v.on_mean_s)?;
        pos("voip.off_mean_s", v.off_mean_s)?;
        pos("voip.rate_bps", v.rate_bps)?;
        if v.pkt_bytes < crate::packet::HEADER_BYTES {
            return Err(invalid("voip.pkt_bytes", "below the 40-byte header"));
        }

        let c = &self.tcp;
        if c.pkt_bytes < crate::packet::HEADER_BYTES {
            return Err(invalid("tcp.pkt_bytes", "below the 40-byte header"));
        }
        if c.ack_bytes < crate::packet::HEADER_BYTES {
            return Err(invalid("tcp.ack_bytes", "below the 40-byte header"));
        }
        pos("tcp.min_rto_s", c.min_rto_s)?;
        pos("tcp.initial_rto_s", c.initial_rto_s)?;
        if c.max_rto_s < c.min_rto_s {
            return Err(invalid("tcp.max_rto_s", "must be at least min_rto_s"));
        }
        if c.rwnd_pkts == 0 {
            return Err(invalid("tcp.rwnd_pkts", "must be positive"));
        }
        if !(c.initial_cwnd >= 1.0) {
            return Err(invalid("tcp.initial_cwnd", "must be at least 1"));
        }
        if !(c.initial_ssthresh >= 2.0) {
            return Err(invalid("tcp.initial_ssthresh", "must be at least 2"));
        }
        Ok(())
    }

    /// The simulator configuration this document describes.
    pub fn to_dumbbell(&self) -> Result<DumbbellConfig, ConfigError> {
        let scheme = self.scheme.ok_or(ConfigError::Missing("scheme"))?;
        let t = &self.topology;
        Ok(DumbbellConfig {
            n_ftp: t.n_ftp,
            n_voip: t.n_voip,
            access_bw_bps: t.access_bw_bps,
            access_delay: SimTime::from_secs_f64(t.access_delay_s),
            bottleneck_bw_bps: t.bottleneck_bw_bps,
            bottleneck_delay: SimTime::from_secs_f64(t.bottleneck_delay_s),
            scheme,
            aqm: AqmParams {
                red: self.red.params(),
                ecn_mode: self.msqm.ecn_mode,
                rio_out_ratio: self.rio.out_threshold_ratio,
                rio_classifier: self.rio.classifier,
                pi: self.pi.clone(),
            },
            voip: self.voip.clone(),
            tcp: self.tcp.clone(),
            duration: SimTime::from_secs_f64(self.duration_s),
            seed: self.seed,
            record_delays: self.metrics.record_delays,
            record_trace: false,
        })
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One simulation of `cfg`, returning checked metrics.
pub fn run_once(cfg: &RunConfig) -> Result<MetricsRecord, RunError> {
    cfg.validate()?;
    Ok(Simulation::run(cfg.to_dumbbell()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_needs_scheme() {
        assert_eq!(parse_config(""), Err(ConfigError::Missing("scheme")));
        let partial = parse_partial("").unwrap();
        assert_eq!(partial, RunConfig::default());
    }

    #[test]
    fn scheme_only_gets_documented_defaults() {
        let cfg = parse_config("scheme = \"msqm\"").unwrap();
        let d = cfg.to_dumbbell().unwrap();
        assert_eq!(d.scheme, Scheme::Msqm);
        assert_eq!(d.aqm.red.max_th_bytes, 3 * d.aqm.red.min_th_bytes);
        assert_eq!(d.aqm.red.buffer_cap_bytes, 8 * d.aqm.red.min_th_bytes);
        assert!(d.aqm.red.gentle && d.aqm.red.byte_mode);
        assert_eq!(d.aqm.ecn_mode, EcnMode::SmallArrivals);
        assert_eq!(crate::aqm::MSQM_ALPHA, 0.1);
        assert_eq!(d.voip.rate_bps, 78_000.0);
        assert_eq!(d.voip.pkt_bytes, 160);
        assert_eq!(d.tcp.pkt_bytes, 1040);
        assert_eq!(d.bottleneck_bw_bps, 50e6);
        assert_eq!(d.access_delay, SimTime::from_millis(1));
    }

    #[test]
    fn negative_bandwidth_names_key() {
        let err = parse_config("scheme = \"red\"\n[topology]\nbottleneck_bw_bps = -5.0\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "topology.bottleneck_bw_bps"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let err = parse_config("scheme = \"red\"\n[red]\nmin_thresh = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("min_thresh"), "{msg}");
        assert!(msg.contains("line 3") || msg.contains("3 |"), "{msg}");
    }

    #[test]
    fn syntax_error_reported() {
        assert!(matches!(parse_config("scheme = "), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn bad_scheme_rejected() {
        let err = parse_config("scheme = \"codel\"").unwrap_err();
        assert!(err.to_string().contains("codel"));
    }

    #[test]
    fn full_document_round_trips() {
        let text = r#"
scheme = "rio"
seed = 9
duration_s = 5.0

[topology]
n_ftp = 3
n_voip = 2

[red]
min_th_bytes = 10000
buffer_bytes = 100000

[msqm]
ecn_mode = "always"

[rio]
out_threshold_ratio = 0.25
classifier = { voip = "in", ftp = "out", ack = "out" }

[pi]
q_ref_pkts = 20

[voip]
shape = 1.2

[tcp]
min_rto_s = 0.3

[metrics]
record_delays = true
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.red.params().max_th_bytes, 30_000);
        assert_eq!(cfg.red.params().buffer_cap_bytes, 100_000);
        assert_eq!(cfg.msqm.ecn_mode, EcnMode::Always);
        assert_eq!(cfg.pi.q_ref_pkts, 20);
        assert_eq!(cfg.pi.a, 1.822e-5);
        let again = parse_config(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(again, cfg);
    }
}
