//! The streaming FIR engine.
//!
//! Every hop the engine extracts features from the newest analysis window,
//! asks a [`TapSource`] for a new filter, optionally converts it to minimum
//! phase, and renders the hop as a Hann crossfade between the outputs of the
//! previous and the new filter.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::baselines::{LstwProcessor, ModelMask, OlaProcessor};
use crate::dsp::{convolve_at, hann_crossfade, RingBuffer, WindowVec};
use crate::error::{invalid, Result};
use crate::features::{FeatureExtractor, FeatureVector, ANALYSIS_WINDOW};
use crate::filter::{FirFilter, DEFAULT_TAPS};
use crate::minphase::{default_nfft, DelayWeighting, GroupDelayMeter, MinPhaseConverter};
use crate::model::{predict_taps, HeadKind, ModelState, ModelWeights};
use crate::SAMPLE_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    DeepFir,
    Lstw,
    Ola,
}

impl std::str::FromStr for Mode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deepfir" => Ok(Mode::DeepFir),
            "lstw" => Ok(Mode::Lstw),
            "ola" => Ok(Mode::Ola),
            other => invalid(format!("unknown mode {other:?}, expected deepfir|lstw|ola")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::DeepFir => "deepfir",
            Mode::Lstw => "lstw",
            Mode::Ola => "ola",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StreamConfig {
    pub sample_rate: u32,
    pub analysis_window: usize,
    pub hop: usize,
    pub synthesis_window: usize,
    pub taps: usize,
    pub min_phase: bool,
    pub mode: Mode,
}

pub fn ms_to_samples(ms: f64) -> Result<usize> {
    let samples = ms * SAMPLE_RATE as f64 / 1000.0;
    if samples.is_nan() || samples < 1.0 || (samples - samples.round()).abs() > 1e-9 {
        return invalid(format!(
            "{ms} ms is not a whole number of samples at {SAMPLE_RATE} Hz"
        ));
    }
    Ok(samples.round() as usize)
}

impl StreamConfig {
    /// Deep FIR: hop equals the synthesis window.
    pub fn deepfir(synthesis: usize, taps: usize, min_phase: bool) -> Result<Self> {
        let c = Self {
            sample_rate: SAMPLE_RATE,
            analysis_window: ANALYSIS_WINDOW,
            hop: synthesis,
            synthesis_window: synthesis,
            taps,
            min_phase,
            mode: Mode::DeepFir,
        };
        c.validate()?;
        Ok(c)
    }

    /// Long analysis, short synthesis window; hop is half the synthesis window.
    pub fn lstw(synthesis: usize) -> Result<Self> {
        let c = Self {
            sample_rate: SAMPLE_RATE,
            analysis_window: ANALYSIS_WINDOW,
            hop: synthesis / 2,
            synthesis_window: synthesis,
            taps: DEFAULT_TAPS,
            min_phase: false,
            mode: Mode::Lstw,
        };
        if !synthesis.is_multiple_of(2) {
            return invalid(format!("lstw synthesis window must be even, got {synthesis}"));
        }
        c.validate()?;
        Ok(c)
    }

    /// Plain overlap-add with equal 256-sample windows at 50% overlap.
    pub fn ola() -> Self {
        Self {
            sample_rate: SAMPLE_RATE,
            analysis_window: ANALYSIS_WINDOW,
            hop: ANALYSIS_WINDOW / 2,
            synthesis_window: ANALYSIS_WINDOW,
            taps: DEFAULT_TAPS,
            min_phase: false,
            mode: Mode::Ola,
        }
    }

    /// Build from a synthesis window in milliseconds. `synthesis_ms` is
    /// ignored in OLA mode, which always synthesizes over the full window.
    pub fn from_ms(mode: Mode, synthesis_ms: f64, taps: usize, min_phase: bool) -> Result<Self> {
        match mode {
            Mode::DeepFir => Self::deepfir(ms_to_samples(synthesis_ms)?, taps, min_phase),
            Mode::Lstw => Self::lstw(ms_to_samples(synthesis_ms)?),
            Mode::Ola => Ok(Self::ola()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate != SAMPLE_RATE {
            return invalid(format!("sample rate must be {SAMPLE_RATE} Hz, got {}", self.sample_rate));
        }
        if self.analysis_window != ANALYSIS_WINDOW {
            return invalid(format!(
                "analysis window must be {ANALYSIS_WINDOW} samples, got {}",
                self.analysis_window
            ));
        }
        if self.hop == 0 {
            return invalid("hop must be >= 1 sample");
        }
        if self.synthesis_window > self.analysis_window {
            return invalid(format!(
                "synthesis window {} exceeds analysis window {}",
                self.synthesis_window, self.analysis_window
            ));
        }
        match self.mode {
            Mode::DeepFir => {
                if self.synthesis_window != self.hop {
                    return invalid("deepfir mode needs hop == synthesis window");
                }
                if self.taps == 0 {
                    return invalid("deepfir mode needs at least one tap");
                }
            }
            Mode::Lstw => {
                if self.hop * 2 != self.synthesis_window {
                    return invalid("lstw mode needs hop == synthesis window / 2");
                }
            }
            Mode::Ola => {
                if self.synthesis_window != self.analysis_window || self.hop * 2 != self.synthesis_window {
                    return invalid("ola mode needs synthesis == analysis window and hop == window / 2");
                }
            }
        }
        Ok(())
    }

    pub fn hop_ms(&self) -> f64 {
        self.hop as f64 * 1000.0 / self.sample_rate as f64
    }

    pub fn synthesis_ms(&self) -> f64 {
        self.synthesis_window as f64 * 1000.0 / self.sample_rate as f64
    }
}

/// Wall time of one hop, split by stage, in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct HopTiming {
    pub front_end_us: f64,
    pub inference_us: f64,
    pub synthesis_us: f64,
}

impl HopTiming {
    pub fn total_us(&self) -> f64 {
        self.front_end_us + self.inference_us + self.synthesis_us
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    pub group_delay: bool,
    pub timing: bool,
}

impl TraceOptions {
    pub const OFF: Self = Self {
        group_delay: false,
        timing: false,
    };
    pub const ALL: Self = Self {
        group_delay: true,
        timing: true,
    };
}

/// Per-hop record of a processed stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalTrace {
    pub hops: usize,
    /// Mean group delay of each installed filter (deepfir only).
    pub group_delay_ms: Vec<f64>,
    pub timings: Vec<HopTiming>,
}

impl EvalTrace {
    pub fn mean_group_delay_ms(&self) -> Option<f64> {
        if self.group_delay_ms.is_empty() {
            None
        } else {
            Some(self.group_delay_ms.iter().sum::<f64>() / self.group_delay_ms.len() as f64)
        }
    }
}

/// Produces the filter for the next hop.
pub trait TapSource {
    fn next_filter(&mut self, features: &FeatureVector) -> Result<FirFilter>;
}

impl<F> TapSource for F
where
    F: FnMut(&FeatureVector) -> Result<FirFilter>,
{
    fn next_filter(&mut self, features: &FeatureVector) -> Result<FirFilter> {
        self(features)
    }
}

/// Tap predictions from the recurrent network; owns one stream's state.
#[derive(Debug, Clone)]
pub struct ModelTaps {
    weights: Arc<ModelWeights>,
    state: ModelState,
}

impl ModelTaps {
    pub fn new(weights: Arc<ModelWeights>) -> Result<Self> {
        if weights.head() != HeadKind::SigmoidTaps {
            return invalid("deepfir mode needs tap-head weights (head_tag 0)");
        }
        let state = weights.new_state();
        Ok(Self { weights, state })
    }

    pub fn taps(&self) -> usize {
        self.weights.dims().out_dim
    }
}

impl TapSource for ModelTaps {
    fn next_filter(&mut self, features: &FeatureVector) -> Result<FirFilter> {
        predict_taps(&self.weights, &mut self.state, features)
    }
}

/// Anything that turns exactly one hop of input into one hop of output.
pub trait HopProcessor {
    fn hop(&self) -> usize;

    fn process_hop(&mut self, input: &[f64], out: &mut Vec<f64>) -> Result<()>;

    fn trace(&self) -> &EvalTrace;

    /// Delay in samples built into the synthesis structure itself, excluding
    /// filter group delay.
    fn structural_delay(&self) -> usize {
        0
    }
}

impl<P: HopProcessor + ?Sized> HopProcessor for Box<P> {
    fn hop(&self) -> usize {
        (**self).hop()
    }

    fn process_hop(&mut self, input: &[f64], out: &mut Vec<f64>) -> Result<()> {
        (**self).process_hop(input, out)
    }

    fn trace(&self) -> &EvalTrace {
        (**self).trace()
    }

    fn structural_delay(&self) -> usize {
        (**self).structural_delay()
    }
}

pub struct FirEngine<S> {
    config: StreamConfig,
    source: S,
    features: FeatureExtractor,
    history: RingBuffer,
    current: FirFilter,
    previous: FirFilter,
    rise: WindowVec,
    fall: WindowVec,
    min_phase: Option<MinPhaseConverter>,
    meter: Option<GroupDelayMeter>,
    trace_opts: TraceOptions,
    trace: EvalTrace,
}

impl<S: TapSource> FirEngine<S> {
    pub fn new(config: StreamConfig, source: S) -> Result<Self> {
        config.validate()?;
        if config.mode != Mode::DeepFir {
            return invalid(format!("fir engine runs deepfir mode, config says {}", config.mode));
        }
        let (rise, fall) = hann_crossfade(config.hop)?;
        let nfft = default_nfft(config.taps);
        Ok(Self {
            history: RingBuffer::new(config.analysis_window + config.taps)?,
            current: FirFilter::impulse(config.taps),
            previous: FirFilter::impulse(config.taps),
            min_phase: if config.min_phase {
                Some(MinPhaseConverter::new(nfft)?)
            } else {
                None
            },
            meter: None,
            features: FeatureExtractor::new(),
            config,
            source,
            rise,
            fall,
            trace_opts: TraceOptions::OFF,
            trace: EvalTrace::default(),
        })
    }

    pub fn with_trace(mut self, opts: TraceOptions) -> Result<Self> {
        self.meter = if opts.group_delay {
            Some(GroupDelayMeter::new(default_nfft(self.config.taps))?)
        } else {
            None
        };
        self.trace_opts = opts;
        Ok(self)
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn current_filter(&self) -> &FirFilter {
        &self.current
    }

    pub fn previous_filter(&self) -> &FirFilter {
        &self.previous
    }

    pub fn source(&self) -> &S {
        &self.source
    }
}

impl<S: TapSource> HopProcessor for FirEngine<S> {
    fn hop(&self) -> usize {
        self.config.hop
    }

    fn process_hop(&mut self, input: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let hop = self.config.hop;
        let taps = self.config.taps;
        if input.len() != hop {
            return invalid(format!("expected a hop of {hop} samples, got {}", input.len()));
        }
        let timing = self.trace_opts.timing;
        let t0 = timing.then(Instant::now);

        self.history.extend(input);
        let features = self
            .features
            .extract(self.history.last(self.config.analysis_window))?;
        let t1 = timing.then(Instant::now);

        let predicted = self.source.next_filter(&features)?;
        let t2 = timing.then(Instant::now);

        if predicted.len() != taps {
            return invalid(format!(
                "tap source produced {} taps, engine is configured for {taps}",
                predicted.len()
            ));
        }
        let installed = match self.min_phase.as_mut() {
            Some(conv) => conv.convert(&predicted)?,
            None => predicted,
        };
        if let Some(meter) = self.meter.as_mut() {
            let gd = meter.measure(&installed, DelayWeighting::MagnitudeWeighted)?;
            self.trace.group_delay_ms.push(gd.mean_ms);
        }
        self.previous = std::mem::replace(&mut self.current, installed);

        // window[taps - 1 + n] is the n-th sample of this hop
        let window = self.history.last(taps - 1 + hop);
        let new = self.current.taps();
        if self.current == self.previous {
            out.extend((0..hop).map(|n| convolve_at(window, new, taps - 1 + n)));
        } else {
            let old = self.previous.taps();
            out.extend((0..hop).map(|n| {
                let at = taps - 1 + n;
                self.rise[n] * convolve_at(window, new, at) + self.fall[n] * convolve_at(window, old, at)
            }));
        }

        if let (Some(t0), Some(t1), Some(t2)) = (t0, t1, t2) {
            let t3 = Instant::now();
            self.trace.timings.push(HopTiming {
                front_end_us: (t1 - t0).as_secs_f64() * 1e6,
                inference_us: (t2 - t1).as_secs_f64() * 1e6,
                synthesis_us: (t3 - t2).as_secs_f64() * 1e6,
            });
        }
        self.trace.hops += 1;
        Ok(())
    }

    fn trace(&self) -> &EvalTrace {
        &self.trace
    }
}

/// Adapts a hop processor to arbitrary chunk sizes.
///
/// Output is produced one hop at a time, so after feeding any sequence of
/// chunks followed by [`Streamer::finish`] the concatenated output is
/// independent of how the input was split.
pub struct Streamer<P> {
    processor: P,
    pending: Vec<f64>,
    consumed: usize,
    emitted: usize,
}

impl<P: HopProcessor> Streamer<P> {
    pub fn new(processor: P) -> Self {
        let hop = processor.hop();
        Self {
            processor,
            pending: Vec::with_capacity(hop),
            consumed: 0,
            emitted: 0,
        }
    }

    pub fn push(&mut self, mut chunk: &[f64], out: &mut Vec<f64>) -> Result<()> {
        let hop = self.processor.hop();
        self.consumed += chunk.len();
        while !chunk.is_empty() {
            let take = (hop - self.pending.len()).min(chunk.len());
            self.pending.extend_from_slice(&chunk[..take]);
            chunk = &chunk[take..];
            if self.pending.len() == hop {
                self.processor.process_hop(&self.pending, out)?;
                self.pending.clear();
                self.emitted += hop;
            }
        }
        Ok(())
    }

    /// Zero-pads a trailing partial hop and trims the output so the total
    /// emitted length equals the total input length.
    pub fn finish(&mut self, out: &mut Vec<f64>) -> Result<()> {
        let hop = self.processor.hop();
        if !self.pending.is_empty() {
            self.pending.resize(hop, 0.0);
            self.processor.process_hop(&self.pending, out)?;
            self.pending.clear();
            self.emitted += hop;
        }
        let excess = self.emitted - self.consumed;
        out.truncate(out.len() - excess);
        self.emitted = self.consumed;
        Ok(())
    }

    pub fn processor(&self) -> &P {
        &self.processor
    }

    pub fn into_processor(self) -> P {
        self.processor
    }
}

/// Build the processor for `config.mode` around the given weights.
pub fn build_processor(
    config: &StreamConfig,
    weights: Arc<ModelWeights>,
    trace: TraceOptions,
) -> Result<Box<dyn HopProcessor + Send>> {
    config.validate()?;
    Ok(match config.mode {
        Mode::DeepFir => {
            let source = ModelTaps::new(weights)?;
            if source.taps() != config.taps {
                return invalid(format!(
                    "weights predict {} taps, config asks for {}",
                    source.taps(),
                    config.taps
                ));
            }
            Box::new(FirEngine::new(*config, source)?.with_trace(trace)?)
        }
        Mode::Lstw => Box::new(LstwProcessor::new(*config, ModelMask::new(weights)?)?.with_timing(trace.timing)),
        Mode::Ola => Box::new(OlaProcessor::new(*config, ModelMask::new(weights)?)?.with_timing(trace.timing)),
    })
}

/// Process a whole signal; the final partial hop is zero-padded and the
/// output truncated to the input length.
pub fn process_stream(
    config: &StreamConfig,
    weights: Arc<ModelWeights>,
    samples: &[f64],
) -> Result<(Vec<f64>, EvalTrace)> {
    let processor = build_processor(config, weights, TraceOptions { group_delay: true, timing: false })?;
    run_processor(processor, samples)
}

pub fn run_processor<P: HopProcessor>(processor: P, samples: &[f64]) -> Result<(Vec<f64>, EvalTrace)> {
    let mut streamer = Streamer::new(processor);
    let mut out = Vec::with_capacity(samples.len() + streamer.processor().hop());
    streamer.push(samples, &mut out)?;
    streamer.finish(&mut out)?;
    Ok((out, streamer.processor().trace().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::PhaseKind;
    use crate::model::ModelDims;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect()
    }

    fn reference_conv(x: &[f64], h: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|n| (0..h.len()).filter(|&k| k <= n).map(|k| h[k] * x[n - k]).sum())
            .collect()
    }

    #[test]
    fn config_rules() {
        assert!(StreamConfig::deepfir(16, 128, true).is_ok());
        assert!(StreamConfig::deepfir(0, 128, true).is_err());
        assert!(StreamConfig::deepfir(512, 128, true).is_err());
        assert_eq!(StreamConfig::lstw(32).unwrap().hop, 16);
        assert!(StreamConfig::lstw(33).is_err());
        assert!(StreamConfig::lstw(512).is_err());
        assert!(StreamConfig::ola().validate().is_ok());
        let c = StreamConfig::from_ms(Mode::DeepFir, 0.0625, 128, false).unwrap();
        assert_eq!(c.hop, 1);
        assert!(StreamConfig::from_ms(Mode::DeepFir, 0.03, 128, false).is_err());
        let mut bad = StreamConfig::ola();
        bad.hop = 64;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fixed_filter_equals_plain_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h: Vec<f64> = (0..128).map(|_| rng.gen_range(0.0..1.0)).collect();
        let fixed = FirFilter::new(h.clone(), PhaseKind::LinearIsh).unwrap();
        let cfg = StreamConfig::deepfir(16, 128, false).unwrap();
        let mut first = true;
        let source = move |_: &FeatureVector| {
            // one identity hop first so prev == current == h from hop 2 on
            if std::mem::take(&mut first) {
                Ok(FirFilter::impulse(128))
            } else {
                Ok(fixed.clone())
            }
        };
        let x = noise(800, 1);
        let (y, _) = run_processor(FirEngine::new(cfg, source).unwrap(), &x).unwrap();
        let expect = reference_conv(&x, &h);
        for n in 32..x.len() {
            assert!((y[n] - expect[n]).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn crossfade_blends_branch_outputs() {
        let cfg = StreamConfig::deepfir(8, 4, false).unwrap();
        let filters = [
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
        ];
        let mut i = 0;
        let source = move |_: &FeatureVector| {
            let f = FirFilter::new(filters[i % 3].clone(), PhaseKind::LinearIsh);
            i += 1;
            f
        };
        let x = noise(24, 2);
        let (y, _) = run_processor(FirEngine::new(cfg, source).unwrap(), &x).unwrap();
        let (rise, fall) = hann_crossfade(8).unwrap();
        let branch = |h: &[f64]| reference_conv(&x, h);
        let ident = branch(&[1.0]);
        let delay2 = branch(&[0.0, 0.0, 1.0]);
        let avg = branch(&[0.5, 0.5]);
        for n in 0..8 {
            // hop 0: prev impulse, new impulse -> plain identity
            assert_eq!(y[n], ident[n]);
            let m = 8 + n;
            let expect = rise[n] * delay2[m] + fall[n] * ident[m];
            assert!((y[m] - expect).abs() < 1e-15);
            let m = 16 + n;
            let expect = rise[n] * avg[m] + fall[n] * delay2[m];
            assert!((y[m] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn single_sample_hop_hands_over_fully() {
        let cfg = StreamConfig::deepfir(1, 8, false).unwrap();
        let mut k = 0usize;
        let source = move |_: &FeatureVector| {
            k += 1;
            Ok(FirFilter::delay(8, k % 8))
        };
        let x = noise(64, 3);
        let (y, _) = run_processor(FirEngine::new(cfg, source).unwrap(), &x).unwrap();
        for (n, yn) in y.iter().enumerate() {
            let d = (n + 1) % 8;
            let expect = if n >= d { x[n - d] } else { 0.0 };
            assert_eq!(*yn, expect);
        }
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let w = Arc::new(ModelWeights::zeros(ModelDims::taps()).unwrap());
        let cfg = StreamConfig::deepfir(16, 128, true).unwrap();
        let (y, trace) = process_stream(&cfg, w, &[]).unwrap();
        assert!(y.is_empty());
        assert_eq!(trace.hops, 0);
    }

    #[test]
    fn one_second_at_one_ms_hop_is_one_thousand_inferences() {
        let w = Arc::new(ModelWeights::random(ModelDims::taps(), 0.05, 9).unwrap());
        let cfg = StreamConfig::deepfir(16, 128, true).unwrap();
        let (y, trace) = process_stream(&cfg, w, &noise(16_000, 4)).unwrap();
        assert_eq!(y.len(), 16_000);
        assert_eq!(trace.hops, 1000);
        assert_eq!(trace.group_delay_ms.len(), 1000);
        assert!(y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn partial_hop_is_padded_and_trimmed() {
        let w = Arc::new(ModelWeights::pinned_delay(ModelDims::taps(), 0).unwrap());
        let cfg = StreamConfig::deepfir(16, 128, false).unwrap();
        let x = noise(37, 6);
        let (y, trace) = process_stream(&cfg, w, &x).unwrap();
        assert_eq!(trace.hops, 3);
        assert_eq!(y, x);
    }

    #[test]
    fn wrong_hop_length_rejected() {
        let cfg = StreamConfig::deepfir(16, 128, false).unwrap();
        let mut e = FirEngine::new(cfg, |_: &FeatureVector| Ok(FirFilter::impulse(128))).unwrap();
        let mut out = Vec::new();
        assert!(e.process_hop(&[0.0; 15], &mut out).is_err());
        let mut short = FirEngine::new(cfg, |_: &FeatureVector| Ok(FirFilter::impulse(64))).unwrap();
        assert!(short.process_hop(&[0.0; 16], &mut out).is_err());
    }

    #[test]
    fn mask_weights_rejected_in_deepfir_mode() {
        let w = Arc::new(ModelWeights::zeros(ModelDims::mask()).unwrap());
        let cfg = StreamConfig::deepfir(16, 128, false).unwrap();
        assert!(process_stream(&cfg, w, &[0.0; 32]).is_err());
    }

    #[test]
    fn linear_in_input_for_pinned_taps() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let seq: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..32).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let run = |x: &[f64]| {
            let mut i = 0;
            let seq = seq.clone();
            let source = move |_: &FeatureVector| {
                i += 1;
                FirFilter::new(seq[(i - 1) % seq.len()].clone(), PhaseKind::LinearIsh)
            };
            let cfg = StreamConfig::deepfir(8, 32, false).unwrap();
            run_processor(FirEngine::new(cfg, source).unwrap(), x).unwrap().0
        };
        let x = noise(400, 7);
        let a = 0.37;
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        let y = run(&x);
        let ys = run(&scaled);
        for (p, q) in y.iter().zip(&ys) {
            assert!((a * p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn separate_streams_do_not_interact() {
        let w = Arc::new(ModelWeights::random(ModelDims::taps(), 0.05, 21).unwrap());
        let cfg = StreamConfig::deepfir(16, 128, true).unwrap();
        let xa = noise(1600, 10);
        let xb = noise(1600, 11);
        let (solo_a, _) = process_stream(&cfg, w.clone(), &xa).unwrap();
        let (solo_b, _) = process_stream(&cfg, w.clone(), &xb).unwrap();

        let mut a = Streamer::new(build_processor(&cfg, w.clone(), TraceOptions::OFF).unwrap());
        let mut b = Streamer::new(build_processor(&cfg, w, TraceOptions::OFF).unwrap());
        let (mut ya, mut yb) = (Vec::new(), Vec::new());
        for (ca, cb) in xa.chunks(16).zip(xb.chunks(16)) {
            a.push(ca, &mut ya).unwrap();
            b.push(cb, &mut yb).unwrap();
        }
        a.finish(&mut ya).unwrap();
        b.finish(&mut yb).unwrap();
        assert_eq!(ya, solo_a);
        assert_eq!(yb, solo_b);
    }
}
