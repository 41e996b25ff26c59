//! Latency accounting, a parametric instruction-count model, and a
//! wall-clock harness.
//!
//! End-to-end latency is modelled as
//! `synthesis window + group delay + hop + hardware latency`. For the mask
//! baselines the filter delay is already inside the synthesis window, so
//! their algorithmic latency is the synthesis window alone.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{build_processor, Mode, StreamConfig, TraceOptions};
use crate::error::{invalid, Result};
use crate::features::{ANALYSIS_WINDOW, FEATURE_DIM};
use crate::minphase::default_nfft;
use crate::model::{ModelDims, ModelWeights};
use crate::Error;

/// Codec/buffering latency assumed when none is given, in ms.
pub const DEFAULT_HARDWARE_MS: f64 = 1.1;
/// Mean group delay of min-phase filters used for the reference table, ms.
pub const REFERENCE_GROUP_DELAY_MS: f64 = 0.25;
/// Two latency values agree if they differ by at most this many ms.
pub const LATENCY_MATCH_MS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyReport {
    pub synthesis_window_ms: f64,
    pub mean_group_delay_ms: f64,
    pub hop_ms: f64,
    pub hardware_ms: f64,
    pub algorithmic_ms: f64,
    pub end_to_end_ms: f64,
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return invalid(format!("{name} must be a finite value >= 0, got {v}"));
    }
    Ok(())
}

/// Group delay that counts towards algorithmic latency for this mode.
fn counted_group_delay(config: &StreamConfig, mean_group_delay_ms: f64) -> f64 {
    match config.mode {
        Mode::DeepFir => mean_group_delay_ms,
        Mode::Lstw | Mode::Ola => 0.0,
    }
}

pub fn algorithmic_latency(config: &StreamConfig, mean_group_delay_ms: f64) -> Result<f64> {
    config.validate()?;
    check_nonnegative("group delay", mean_group_delay_ms)?;
    Ok(config.synthesis_ms() + counted_group_delay(config, mean_group_delay_ms))
}

pub fn end_to_end_latency(
    config: &StreamConfig,
    mean_group_delay_ms: f64,
    hardware_ms: f64,
) -> Result<LatencyReport> {
    check_nonnegative("hardware latency", hardware_ms)?;
    let algorithmic_ms = algorithmic_latency(config, mean_group_delay_ms)?;
    let hop_ms = config.hop_ms();
    Ok(LatencyReport {
        synthesis_window_ms: config.synthesis_ms(),
        mean_group_delay_ms: counted_group_delay(config, mean_group_delay_ms),
        hop_ms,
        hardware_ms,
        algorithmic_ms,
        end_to_end_ms: algorithmic_ms + hop_ms + hardware_ms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostSource {
    /// Counted from the architecture: one instruction per multiply-accumulate
    /// plus `5 N log2 N` per N-point FFT.
    MacCount,
    /// Per-hop cost fitted so the model reproduces a measured figure.
    Calibrated { mode: Mode, hop: usize, mips: f64 },
}

/// Instructions per hop and per output sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostModel {
    pub per_hop: f64,
    pub per_sample: f64,
    pub source: CostSource,
}

fn fft_cost(n: usize) -> f64 {
    5.0 * n as f64 * (n as f64).log2()
}

impl CostModel {
    pub fn from_architecture(dims: &ModelDims, config: &StreamConfig) -> Result<Self> {
        config.validate()?;
        let (f, h, c, o) = (dims.feature_dim, dims.hidden, dims.fc_dim, dims.out_dim);
        let lstm = 4 * h * (f + h) + 4 * h * (2 * h) + 4 * h * 2 * 5;
        let dense = h * c + c * o;
        let front_end = fft_cost(ANALYSIS_WINDOW) + 2.0 * FEATURE_DIM as f64;
        let mut per_hop = (lstm + dense) as f64 + front_end;
        let per_sample = match config.mode {
            Mode::DeepFir => {
                if config.min_phase {
                    per_hop += 3.0 * fft_cost(default_nfft(config.taps));
                }
                // two branch convolutions plus the crossfade
                (2 * config.taps + 3) as f64
            }
            Mode::Lstw | Mode::Ola => {
                // inverse FFT, mask and overlap-add all scale with the analysis
                // window, not the hop
                per_hop += fft_cost(ANALYSIS_WINDOW)
                    + 2.0 * FEATURE_DIM as f64
                    + 3.0 * config.synthesis_window as f64;
                0.0
            }
        };
        Ok(Self {
            per_hop,
            per_sample,
            source: CostSource::MacCount,
        })
    }

    /// Keep the per-sample cost and fit the per-hop cost to a measured MIPS
    /// figure at `config`.
    pub fn calibrate(&self, config: &StreamConfig, measured_mips: f64) -> Result<Self> {
        config.validate()?;
        check_nonnegative("measured mips", measured_mips)?;
        let per_hop = measured_mips * 1e6 * hop_seconds(config) - self.per_sample * config.hop as f64;
        if per_hop <= 0.0 {
            return invalid(format!(
                "{measured_mips} MIPS does not cover the per-sample cost at hop {}",
                config.hop
            ));
        }
        Ok(Self {
            per_hop,
            per_sample: self.per_sample,
            source: CostSource::Calibrated {
                mode: config.mode,
                hop: config.hop,
                mips: measured_mips,
            },
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            per_hop: self.per_hop * factor,
            per_sample: self.per_sample * factor,
            source: self.source.clone(),
        }
    }
}

fn hop_seconds(config: &StreamConfig) -> f64 {
    config.hop as f64 / config.sample_rate as f64
}

/// `(per_hop + per_sample · hop) / hop_seconds / 1e6`.
pub fn estimate_mips(cost: &CostModel, config: &StreamConfig) -> Result<f64> {
    if config.hop == 0 {
        return invalid("hop must be >= 1 sample");
    }
    if cost.per_hop.is_nan() || cost.per_hop <= 0.0 || cost.per_sample < 0.0 {
        return invalid("cost model counts must be positive");
    }
    Ok((cost.per_hop + cost.per_sample * config.hop as f64) / hop_seconds(config) / 1e6)
}

/// One row of the reference latency/compute table with what the formulas
/// here give for it.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub mode: Mode,
    pub synthesis_ms: f64,
    pub reported_algorithmic_ms: f64,
    pub reported_end_to_end_ms: f64,
    pub reported_mips: f64,
    pub computed: LatencyReport,
    pub predicted_mips: f64,
    pub algorithmic_matches: bool,
    pub end_to_end_matches: bool,
    pub mips_within_15_percent: bool,
    /// Set when the reported end-to-end value disagrees with the formula.
    pub flagged: bool,
}

/// Default-size cost model for `mode`, calibrated on the 1 ms reference
/// row (Deep FIR 388 MIPS; the mask baselines share the LSTW 888 MIPS row).
pub fn reference_cost(mode: Mode) -> Result<CostModel> {
    let (dims, mips) = match mode {
        Mode::DeepFir => (ModelDims::taps(), 388.0),
        Mode::Lstw | Mode::Ola => (ModelDims::mask(), 888.0),
    };
    let cal_mode = if mode == Mode::DeepFir { Mode::DeepFir } else { Mode::Lstw };
    let cal = StreamConfig::from_ms(cal_mode, 1.0, dims.out_dim, true)?;
    CostModel::from_architecture(&dims, &cal)?.calibrate(&cal, mips)
}

/// Reported (mode, synthesis ms, algorithmic ms, end-to-end ms, MIPS).
pub const REFERENCE_TABLE: [(Mode, f64, f64, f64, f64); 9] = [
    (Mode::Lstw, 1.0, 1.0, 2.5, 888.0),
    (Mode::Lstw, 2.0, 2.0, 4.1, 444.0),
    (Mode::Lstw, 4.0, 4.0, 7.5, 222.0),
    (Mode::Ola, 16.0, 16.0, 25.2, 111.0),
    (Mode::DeepFir, 0.0625, 0.32, 1.48, 5485.0),
    (Mode::DeepFir, 0.125, 0.38, 1.6, 2742.0),
    (Mode::DeepFir, 0.25, 0.5, 1.85, 1407.0),
    (Mode::DeepFir, 0.5, 0.75, 2.35, 728.0),
    (Mode::DeepFir, 1.0, 1.25, 3.35, 388.0),
];

/// Recompute every row of the reference table from the latency formula and
/// the cost model (calibrated on the 1 ms Deep FIR and 1 ms LSTW rows).
pub fn reproduce_reference_table() -> Result<Vec<TableRow>> {
    let fir_cost = reference_cost(Mode::DeepFir)?;
    let mask_cost = reference_cost(Mode::Lstw)?;

    REFERENCE_TABLE
        .iter()
        .map(|&(mode, synth, alg, e2e, mips)| {
            let config = StreamConfig::from_ms(mode, synth, 128, true)?;
            let computed = end_to_end_latency(&config, REFERENCE_GROUP_DELAY_MS, DEFAULT_HARDWARE_MS)?;
            let cost = if mode == Mode::DeepFir { &fir_cost } else { &mask_cost };
            let predicted_mips = estimate_mips(cost, &config)?;
            let end_to_end_matches = (computed.end_to_end_ms - e2e).abs() <= LATENCY_MATCH_MS;
            Ok(TableRow {
                mode,
                synthesis_ms: synth,
                reported_algorithmic_ms: alg,
                reported_end_to_end_ms: e2e,
                reported_mips: mips,
                algorithmic_matches: (computed.algorithmic_ms - alg).abs() <= LATENCY_MATCH_MS,
                end_to_end_matches,
                mips_within_15_percent: (predicted_mips - mips).abs() / mips <= 0.15,
                flagged: !end_to_end_matches,
                computed,
                predicted_mips,
            })
        })
        .collect()
}

/// Wall-clock statistics over processed hops.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub hops: usize,
    pub hop_duration_us: f64,
    pub mean_us: f64,
    pub p95_us: f64,
    pub max_us: f64,
    pub mean_front_end_us: f64,
    pub mean_inference_us: f64,
    pub mean_synthesis_us: f64,
    /// Share of per-hop time spent in the network.
    pub inference_fraction: f64,
    /// Mean per-hop time over hop duration; below 1 is faster than real time.
    pub real_time_factor: f64,
}

impl TimingReport {
    pub fn from_timings(timings: &[crate::engine::HopTiming], hop_duration_us: f64) -> Result<Self> {
        if timings.is_empty() {
            return invalid("no hop timings recorded");
        }
        let n = timings.len() as f64;
        let mut totals: Vec<f64> = timings.iter().map(|t| t.total_us()).collect();
        totals.sort_by(|a, b| a.total_cmp(b));
        let mean = totals.iter().sum::<f64>() / n;
        let p95_idx = ((0.95 * n).ceil() as usize).clamp(1, totals.len()) - 1;
        let mean_of = |f: fn(&crate::engine::HopTiming) -> f64| timings.iter().map(f).sum::<f64>() / n;
        let mean_inference_us = mean_of(|t| t.inference_us);
        Ok(Self {
            hops: timings.len(),
            hop_duration_us,
            mean_us: mean,
            p95_us: totals[p95_idx],
            max_us: totals[totals.len() - 1],
            mean_front_end_us: mean_of(|t| t.front_end_us),
            mean_inference_us,
            mean_synthesis_us: mean_of(|t| t.synthesis_us),
            inference_fraction: if mean > 0.0 { mean_inference_us / mean } else { 0.0 },
            real_time_factor: mean / hop_duration_us,
        })
    }
}

/// Run `seconds` of deterministic noise through a freshly built processor on
/// its own thread and report per-hop wall time.
pub fn measure_realtime(
    config: &StreamConfig,
    weights: Arc<ModelWeights>,
    seconds: f64,
) -> Result<TimingReport> {
    check_nonnegative("seconds", seconds)?;
    let samples = (seconds * config.sample_rate as f64).round() as usize;
    let hop = config.hop;
    let hops = samples / hop;
    if hops == 0 {
        return invalid(format!("{seconds} s is shorter than one hop"));
    }
    let mut processor = build_processor(
        config,
        weights,
        TraceOptions {
            group_delay: false,
            timing: true,
        },
    )?;
    let hop_duration_us = hop as f64 / config.sample_rate as f64 * 1e6;
    std::thread::scope(|s| {
        s.spawn(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let mut input = vec![0.0; hop];
            let mut out = Vec::with_capacity(hop);
            for _ in 0..hops {
                input.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
                out.clear();
                processor.process_hop(&input, &mut out)?;
            }
            TimingReport::from_timings(&processor.trace().timings, hop_duration_us)
        })
        .join()
        .map_err(|_| Error::InvalidArgument("benchmark thread panicked".into()))?
    })
}
