//! Traffic sources and transport endpoints.

mod pareto;
mod sink;
mod tcp;
mod voip;

pub use pareto::{pareto_sample, pareto_scale};
pub use sink::TcpSink;
pub use tcp::{TcpConfig, TcpError, TcpPhase, TcpSender, TcpStep};
pub use voip::{Phase, VoipConfig, VoipSource};
