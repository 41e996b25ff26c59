pub mod baselines;
pub mod dsp;
pub mod engine;
pub mod error;
pub mod features;
pub mod filter;
pub mod latency;
pub mod metrics;
pub mod minphase;
pub mod model;
pub mod report;
pub mod wav;

pub use engine::{process_stream, FirEngine, Mode, StreamConfig, Streamer};
pub use error::{Error, Result};
pub use filter::{FirFilter, PhaseKind};
pub use model::{ModelDims, ModelWeights};

/// Operating sample rate in Hz.
pub const SAMPLE_RATE: u32 = 16_000;
