//! JSON run reports. Everything except the `timing` section is a
//! deterministic function of the inputs and flags.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::engine::{Mode, StreamConfig};
use crate::error::{invalid, Result};
use crate::latency::{LatencyReport, TimingReport};
use crate::metrics::{
    align, best_lag, si_sdr, signal_loss, LossConfig, STFT_HOP, STFT_WINDOW,
};
use crate::minphase::DelayWeighting;

pub const SCHEMA_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Search range for best-lag alignment of min-phase output, in samples.
pub const MAX_ALIGN_LAG: usize = 128;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Alignment {
    /// Estimate is compared `lag` samples later than the reference.
    Fixed { lag: isize },
    /// Lag chosen by maximum normalized correlation within ±128 samples.
    BestLag,
}

impl Alignment {
    /// Delay to compensate when scoring the output of `config`:
    /// linear-phase Deep FIR output trails by half the taps, the mask
    /// baselines by their overlap-add delay, and min-phase output has no
    /// fixed delay so it is searched.
    pub fn for_config(config: &StreamConfig) -> Self {
        match config.mode {
            Mode::DeepFir if config.min_phase => Alignment::BestLag,
            Mode::DeepFir => Alignment::Fixed {
                lag: (config.taps / 2) as isize,
            },
            Mode::Lstw => Alignment::Fixed {
                lag: (config.synthesis_window - config.hop) as isize,
            },
            Mode::Ola => Alignment::Fixed {
                lag: (config.analysis_window - config.hop) as isize,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LossStft {
    pub window: usize,
    pub hop: usize,
    pub window_kind: &'static str,
}

impl Default for LossStft {
    fn default() -> Self {
        Self {
            window: STFT_WINDOW,
            hop: STFT_HOP,
            window_kind: "sqrt-hann",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub si_sdr_db: f64,
    pub si_sdr_mix_db: Option<f64>,
    pub si_sdr_improvement_db: Option<f64>,
    pub loss: f64,
    pub loss_config: LossConfig,
    pub loss_stft: LossStft,
    pub alignment: Alignment,
    pub applied_lag: isize,
    /// Set when the lag was searched rather than known; SI-SDR of phase
    /// modified output is then only indicative.
    pub lag_searched: bool,
    pub scored_samples: usize,
}

/// Score `estimate` against `reference` (and optionally the unprocessed
/// `mix`) after compensating the given alignment.
pub fn evaluate(
    reference: &[f64],
    estimate: &[f64],
    mix: Option<&[f64]>,
    alignment: Alignment,
) -> Result<MetricsReport> {
    if reference.len() != estimate.len() {
        return invalid(format!(
            "reference has {} samples, estimate has {}",
            reference.len(),
            estimate.len()
        ));
    }
    if let Some(m) = mix {
        if m.len() != reference.len() {
            return invalid("mix length differs from reference length");
        }
    }
    let lag = match alignment {
        Alignment::Fixed { lag } => lag,
        Alignment::BestLag => best_lag(reference, estimate, MAX_ALIGN_LAG),
    };
    let (r, e) = align(reference, estimate, lag);
    if r.is_empty() {
        return invalid(format!("lag {lag} leaves nothing to score"));
    }
    let si = si_sdr(&r, &e)?;
    let si_mix = match mix {
        Some(m) => {
            let (r_m, m_al) = align(reference, m, 0);
            // score the mix on the same reference span as the estimate
            let (start, n) = if lag >= 0 { (0, r.len()) } else { ((-lag) as usize, r.len()) };
            Some(si_sdr(&r_m[start..start + n], &m_al[start..start + n])?)
        }
        None => None,
    };
    let loss_config = LossConfig::default();
    let loss = signal_loss(&r, &e, &loss_config)?;
    Ok(MetricsReport {
        si_sdr_db: si,
        si_sdr_mix_db: si_mix,
        si_sdr_improvement_db: si_mix.map(|m| si - m),
        loss,
        loss_config,
        loss_stft: LossStft::default(),
        alignment,
        applied_lag: lag,
        lag_searched: matches!(alignment, Alignment::BestLag),
        scored_samples: r.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupDelaySummary {
    pub mean_ms: Option<f64>,
    pub weighting: DelayWeighting,
    pub hops_measured: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub engine_version: &'static str,
    pub weights_sha256: String,
    pub config: StreamConfig,
    pub hops: usize,
    pub group_delay: GroupDelaySummary,
    pub latency: LatencyReport,
    pub metrics: Option<MetricsReport>,
    /// Wall-clock figures; the only nondeterministic section.
    pub timing: Option<TimingReport>,
}

pub fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize infallibly")
}
