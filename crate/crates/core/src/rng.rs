//! Deterministic random-number streams.
//!
//! Every stream is a ChaCha8 generator keyed by the run seed, with the
//! stream id selecting one of ChaCha's 2^64 independent keystreams. A stream
//! is a pure function of `(seed, stream_id)`, so adding a flow never shifts
//! the draws seen by another flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream used by the bottleneck queue discipline for drop decisions.
pub const AQM_STREAM: u64 = 0;

/// Stream id for the VoIP source of flow `flow_id`.
pub fn voip_stream(flow_id: u32) -> u64 {
    (1u64 << 32) | flow_id as u64
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform in `(0, 1]`.
    pub fn uniform_open_closed(&mut self) -> f64 {
        1.0 - self.uniform()
    }
}

impl PartialEq for RngStream {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed && self.stream_id == other.stream_id && self.rng == other.rng
    }
}
