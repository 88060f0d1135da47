//! A deterministic discrete-event simulator of a dumbbell network, built to
//! compare a packet-size-aware AQM (M-SQM) with RED, RIO and PI when small
//! VoIP packets share a bottleneck with bulk TCP transfers.
//!
//! ```
//! use aqm_lab::aqm::Scheme;
//! use aqm_lab::engine::{DumbbellConfig, Simulation};
//! use aqm_lab::time::SimTime;
//!
//! let mut cfg = DumbbellConfig::new(Scheme::Msqm, 2, 2);
//! cfg.duration = SimTime::from_secs_f64(2.0);
//! let m = Simulation::run(cfg).unwrap();
//! assert!(m.ftp().received > 0);
//! assert!(m.is_finalized());
//! ```

pub mod aqm;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod packet;
pub mod rng;
pub mod sweep;
pub mod time;
pub mod traffic;

use thiserror::Error;

/// Anything a top-level run or sweep can fail with.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Sim(#[from] engine::SimError),
    #[error(transparent)]
    Sweep(#[from] sweep::SweepError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for bad input (exit code 1) as opposed to a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Sweep(sweep::SweepError::Config(_)) | Error::Sim(engine::SimError::Config(_))
        )
    }
}

impl From<config::RunError> for Error {
    fn from(e: config::RunError) -> Self {
        match e {
            config::RunError::Config(c) => Error::Config(c),
            config::RunError::Sim(s) => Error::Sim(s),
        }
    }
}

// Every ```rust block in the guide compiles and runs as a doctest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/msqm.md")]
    mod msqm {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/traffic.md")]
    mod traffic {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
