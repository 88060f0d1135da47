//! Parameter sweeps over (scheme, varied flow count, seed).
//!
//! Scenario 1 varies the number of VoIP flows against a fixed FTP
//! population; scenario 2 varies FTP flows against fixed VoIP flows.
//! Cells run in parallel but rows always come back in
//! (scheme list order, flow count, seed list order).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;
use thiserror::Error;

use crate::aqm::Scheme;
use crate::config::{ConfigError, RunConfig};
use crate::engine::{SimError, Simulation};
use crate::metrics::{write_csv, MetricsError, MetricsRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// VoIP flows vary, FTP flows fixed.
    VoipVaried,
    /// FTP flows vary, VoIP flows fixed.
    FtpVaried,
}

impl Scenario {
    pub fn number(self) -> u8 {
        match self {
            Scenario::VoipVaried => 1,
            Scenario::FtpVaried => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self, ConfigError> {
        match n {
            1 => Ok(Scenario::VoipVaried),
            2 => Ok(Scenario::FtpVaried),
            _ => Err(ConfigError::Invalid { key: "scenario".into(), reason: format!("{n} is not 1 or 2") }),
        }
    }

    /// (n_ftp, n_voip) for a cell.
    pub fn flows(self, varied: u32, fixed: u32) -> (u32, u32) {
        match self {
            Scenario::VoipVaried => (fixed, varied),
            Scenario::FtpVaried => (varied, fixed),
        }
    }
}

/// Inclusive `start:stop:step` range of flow counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowRange {
    pub start: u32,
    pub stop: u32,
    pub step: u32,
}

impl FlowRange {
    pub fn points(&self) -> Vec<u32> {
        (self.start..=self.stop).step_by(self.step as usize).collect()
    }
}

impl FromStr for FlowRange {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = |reason: &str| ConfigError::Invalid { key: "flows".into(), reason: format!("`{s}`: {reason}") };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let n = |p: &str| p.trim().parse::<u32>().map_err(|_| bad("not a non-negative integer"));
        let r = FlowRange { start: n(parts[0])?, stop: n(parts[1])?, step: n(parts[2])? };
        if r.step == 0 {
            return Err(bad("step must be positive"));
        }
        if r.stop < r.start {
            return Err(bad("stop is below start"));
        }
        Ok(r)
    }
}

/// Seeds as an inclusive range `a..b` or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, ConfigError> {
    let bad = |reason: &str| ConfigError::Invalid { key: "seeds".into(), reason: format!("`{s}`: {reason}") };
    let num = |p: &str| p.trim().parse::<u64>().map_err(|_| bad("not a non-negative integer"));
    let seeds = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if b < a {
            return Err(bad("empty range"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad("no seeds"));
    }
    Ok(seeds)
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>, ConfigError> {
    let schemes = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<Scheme>()
                .map_err(|e| ConfigError::Invalid { key: "schemes".into(), reason: e.to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (i, a) in schemes.iter().enumerate() {
        if schemes[..i].contains(a) {
            return Err(ConfigError::Invalid { key: "schemes".into(), reason: format!("{a} listed twice") });
        }
    }
    Ok(schemes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub schemes: Vec<Scheme>,
    pub flows: FlowRange,
    pub fixed_flows: u32,
    pub seeds: Vec<u64>,
    /// Multiplies flow counts and link bandwidths, keeping load per flow.
    pub scale: f64,
    /// Everything else (durations, AQM and traffic parameters).
    pub base: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepCell {
    pub scheme: Scheme,
    pub varied_flows: u32,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{scheme} with {varied_flows} varied flows, seed {seed}: {source}")]
    Cell {
        scheme: Scheme,
        varied_flows: u32,
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("cannot build thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot create {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn scale_count(n: u32, scale: f64) -> u32 {
    (n as f64 * scale).round() as u32
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(ConfigError::Invalid { key: "scale".into(), reason: format!("{} must be positive", self.scale) });
        }
        if self.schemes.is_empty() {
            return Err(ConfigError::Invalid { key: "schemes".into(), reason: "no schemes".into() });
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid { key: "seeds".into(), reason: "no seeds".into() });
        }
        self.base.validate()
    }

    /// Scaled varied flow counts, ascending and without repeats.
    pub fn varied_points(&self) -> Vec<u32> {
        let mut pts: Vec<u32> = self.flows.points().into_iter().map(|n| scale_count(n, self.scale)).collect();
        pts.dedup();
        pts
    }

    pub fn fixed_scaled(&self) -> u32 {
        scale_count(self.fixed_flows, self.scale)
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let pts = self.varied_points();
        let mut cells = Vec::with_capacity(self.schemes.len() * pts.len() * self.seeds.len());
        for &scheme in &self.schemes {
            for &varied_flows in &pts {
                for &seed in &self.seeds {
                    cells.push(SweepCell { scheme, varied_flows, seed });
                }
            }
        }
        cells
    }

    pub fn cell_config(&self, cell: SweepCell) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.scheme = Some(cell.scheme);
        cfg.seed = cell.seed;
        let (n_ftp, n_voip) = self.scenario.flows(cell.varied_flows, self.fixed_scaled());
        cfg.topology.n_ftp = n_ftp;
        cfg.topology.n_voip = n_voip;
        cfg.topology.access_bw_bps *= self.scale;
        cfg.topology.bottleneck_bw_bps *= self.scale;
        cfg
    }

    pub fn run_cell(&self, cell: SweepCell) -> Result<MetricsRecord, SweepError> {
        let cfg = self.cell_config(cell);
        let sim = cfg.to_dumbbell()?;
        let mut rec = Simulation::run(sim).map_err(|source| SweepError::Cell {
            scheme: cell.scheme,
            varied_flows: cell.varied_flows,
            seed: cell.seed,
            source,
        })?;
        rec.meta.scenario = Some(self.scenario.number());
        rec.meta.varied_flows = Some(cell.varied_flows);
        Ok(rec)
    }
}

/// Runs every cell on `jobs` worker threads (0 = one per core).
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<MetricsRecord>, SweepError> {
    spec.validate()?;
    let cells = spec.cells();
    info!(
        "scenario {}: {} cells, varied flows {:?}, fixed {}",
        spec.scenario.number(),
        cells.len(),
        spec.varied_points(),
        spec.fixed_scaled()
    );
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<Result<MetricsRecord, SweepError>> =
        pool.install(|| cells.par_iter().map(|&c| spec.run_cell(c)).collect());
    results.into_iter().collect()
}

/// Runs the sweep and writes `scenario<N>.csv` under `dir`.
pub fn run_sweep_to(spec: &SweepSpec, jobs: usize, dir: &Path) -> Result<PathBuf, SweepError> {
    let records = run_sweep(spec, jobs)?;
    std::fs::create_dir_all(dir).map_err(|source| SweepError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(format!("scenario{}.csv", spec.scenario.number()));
    write_csv(&records, &path)?;
    Ok(path)
}
