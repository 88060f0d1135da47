use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use aqm_lab::config::{parse_config, parse_partial, run_once, RunConfig};
use aqm_lab::metrics::write_csv;
use aqm_lab::sweep::{parse_schemes, parse_seeds, run_sweep_to, FlowRange, Scenario, SweepSpec};
use aqm_lab::Error;

#[derive(Parser)]
#[command(name = "aqm-lab", version, about = "Dumbbell AQM simulator: M-SQM, RED, RIO and PI")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output path; defaults to `out` in the config, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario grid and write scenario<N>.csv.
    Sweep {
        /// 1: VoIP flows vary; 2: FTP flows vary.
        #[arg(long)]
        scenario: u8,
        #[arg(long, default_value = "msqm,red,rio,pi")]
        schemes: String,
        /// Varied flow counts as start:stop:step (inclusive).
        #[arg(long, default_value = "0:200:25")]
        flows: String,
        /// Count of the non-varied class.
        #[arg(long, default_value_t = 100)]
        fixed: u32,
        /// `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "1..5")]
        seeds: String,
        /// Multiplies flow counts and link bandwidths.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Base parameters; `scheme` may be omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Read { path: path.clone(), source })
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = parse_config(&read(&config)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let record = run_once(&cfg)?;
            match out.or_else(|| cfg.out.as_ref().map(PathBuf::from)) {
                Some(path) => {
                    write_csv(std::slice::from_ref(&record), &path)?;
                    info!("wrote {}", path.display());
                }
                None => aqm_lab::metrics::write_csv_to(std::slice::from_ref(&record), std::io::stdout().lock())
                    .map_err(|source| aqm_lab::metrics::MetricsError::Io { path: "<stdout>".into(), source })?,
            }
        }
        Command::Sweep { scenario, schemes, flows, fixed, seeds, scale, config, out, jobs } => {
            let base = match config {
                Some(p) => parse_partial(&read(&p)?)?,
                None => RunConfig::default(),
            };
            let spec = SweepSpec {
                scenario: Scenario::from_number(scenario)?,
                schemes: parse_schemes(&schemes)?,
                flows: flows.parse::<FlowRange>()?,
                fixed_flows: fixed,
                seeds: parse_seeds(&seeds)?,
                scale,
                base,
            };
            spec.validate().map_err(Error::Config)?;
            let path = run_sweep_to(&spec, jobs, &out)?;
            info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
