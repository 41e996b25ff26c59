//! Spectral-mask baselines driven by the same recurrent runtime with a mask
//! head: plain 50% overlap-add (OLA) and long analysis / short synthesis
//! window processing (LSTW).

use std::sync::Arc;
use std::time::Instant;

use crate::dsp::{sqrt_hann, Complex64, RealFft, RingBuffer, WindowVec};
use crate::engine::{EvalTrace, HopProcessor, HopTiming, Mode, StreamConfig};
use crate::error::{invalid, Result};
use crate::features::{FeatureExtractor, FeatureVector, FEATURE_DIM};
use crate::model::{predict_mask, HeadKind, MaskFrame, ModelState, ModelWeights};

pub trait MaskSource {
    fn next_mask(&mut self, features: &FeatureVector) -> Result<MaskFrame>;
}

impl<F> MaskSource for F
where
    F: FnMut(&FeatureVector) -> Result<MaskFrame>,
{
    fn next_mask(&mut self, features: &FeatureVector) -> Result<MaskFrame> {
        self(features)
    }
}

#[derive(Debug, Clone)]
pub struct ModelMask {
    weights: Arc<ModelWeights>,
    state: ModelState,
}

impl ModelMask {
    pub fn new(weights: Arc<ModelWeights>) -> Result<Self> {
        if weights.head() != HeadKind::SigmoidMask {
            return invalid("mask baselines need mask-head weights (head_tag 1)");
        }
        if weights.dims().out_dim != FEATURE_DIM {
            return invalid(format!(
                "mask head has {} outputs, analysis spectrum has {FEATURE_DIM} bins",
                weights.dims().out_dim
            ));
        }
        let state = weights.new_state();
        Ok(Self { weights, state })
    }
}

impl MaskSource for ModelMask {
    fn next_mask(&mut self, features: &FeatureVector) -> Result<MaskFrame> {
        predict_mask(&self.weights, &mut self.state, features)
    }
}

fn check_mask(mask: &MaskFrame) -> Result<()> {
    if mask.gains().len() != FEATURE_DIM {
        return invalid(format!(
            "mask has {} gains, expected {FEATURE_DIM}",
            mask.gains().len()
        ));
    }
    Ok(())
}

fn apply_mask(spectrum: &mut [Complex64], mask: &MaskFrame) {
    for (c, g) in spectrum.iter_mut().zip(mask.gains()) {
        *c *= *g;
    }
}

fn micros(a: Instant, b: Instant) -> f64 {
    (b - a).as_secs_f64() * 1e6
}

/// Square-root-Hann analysis and synthesis over 256 samples, hop 128.
/// A unity mask reconstructs the input delayed by 128 samples.
pub struct OlaProcessor<S> {
    source: S,
    hop: usize,
    features: FeatureExtractor,
    history: RingBuffer,
    window: WindowVec,
    fft: RealFft,
    frame: Vec<f64>,
    spectrum: Vec<Complex64>,
    time: Vec<f64>,
    acc: Vec<f64>,
    timing: bool,
    trace: EvalTrace,
}

impl<S: MaskSource> OlaProcessor<S> {
    pub fn new(config: StreamConfig, source: S) -> Result<Self> {
        config.validate()?;
        if config.mode != Mode::Ola {
            return invalid(format!("ola processor needs ola mode, config says {}", config.mode));
        }
        let n = config.analysis_window;
        Ok(Self {
            source,
            hop: config.hop,
            features: FeatureExtractor::new(),
            history: RingBuffer::new(n)?,
            window: sqrt_hann(n)?,
            fft: RealFft::new(n)?,
            frame: vec![0.0; n],
            spectrum: Vec::with_capacity(n / 2 + 1),
            time: Vec::with_capacity(n),
            acc: vec![0.0; n],
            timing: false,
            trace: EvalTrace::default(),
        })
    }

    pub fn with_timing(mut self, on: bool) -> Self {
        self.timing = on;
        self
    }
}

impl<S: MaskSource> HopProcessor for OlaProcessor<S> {
    fn hop(&self) -> usize {
        self.hop
    }

    fn process_hop(&mut self, input: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if input.len() != self.hop {
            return invalid(format!("expected a hop of {} samples, got {}", self.hop, input.len()));
        }
        let t0 = self.timing.then(Instant::now);
        self.history.extend(input);
        let frame = self.history.last(self.window.len());
        let features = self.features.extract(frame)?;
        let t1 = self.timing.then(Instant::now);
        let mask = self.source.next_mask(&features)?;
        check_mask(&mask)?;
        let t2 = self.timing.then(Instant::now);

        for ((d, s), w) in self.frame.iter_mut().zip(frame).zip(self.window.iter()) {
            *d = s * w;
        }
        self.fft.forward_into(&self.frame, &mut self.spectrum)?;
        apply_mask(&mut self.spectrum, &mask);
        self.fft.inverse_into(&self.spectrum, &mut self.time)?;
        for ((a, y), w) in self.acc.iter_mut().zip(&self.time).zip(self.window.iter()) {
            *a += y * w;
        }
        out.extend_from_slice(&self.acc[..self.hop]);
        self.acc.copy_within(self.hop.., 0);
        let n = self.acc.len();
        self.acc[n - self.hop..].fill(0.0);

        if let (Some(t0), Some(t1), Some(t2)) = (t0, t1, t2) {
            self.trace.timings.push(HopTiming {
                front_end_us: micros(t0, t1),
                inference_us: micros(t1, t2),
                synthesis_us: micros(t2, Instant::now()),
            });
        }
        self.trace.hops += 1;
        Ok(())
    }

    fn trace(&self) -> &EvalTrace {
        &self.trace
    }

    fn structural_delay(&self) -> usize {
        self.window.len() - self.hop
    }
}

/// Hamming-windowed 256-sample analysis; only the newest `synthesis`
/// samples of each masked frame are synthesized, with 50% overlap-add.
///
/// The extracted segment is divided by the analysis window over those
/// samples and weighted by a square-root-Hann twice (once as the
/// compensation, once as the synthesis window), so a unity mask reconstructs
/// the input delayed by half a synthesis window.
pub struct LstwProcessor<S> {
    source: S,
    hop: usize,
    synthesis: usize,
    features: FeatureExtractor,
    history: RingBuffer,
    fft: RealFft,
    synth_window: WindowVec,
    compensation: Vec<f64>,
    spectrum: Vec<Complex64>,
    time: Vec<f64>,
    acc: Vec<f64>,
    timing: bool,
    trace: EvalTrace,
}

impl<S: MaskSource> LstwProcessor<S> {
    pub fn new(config: StreamConfig, source: S) -> Result<Self> {
        config.validate()?;
        if config.mode != Mode::Lstw {
            return invalid(format!("lstw processor needs lstw mode, config says {}", config.mode));
        }
        let n = config.analysis_window;
        let s = config.synthesis_window;
        let features = FeatureExtractor::new();
        let synth_window = sqrt_hann(s)?;
        let analysis_tail = &features.window()[n - s..];
        let compensation = synth_window
            .iter()
            .zip(analysis_tail)
            .map(|(w, a)| w / a)
            .collect();
        Ok(Self {
            source,
            hop: config.hop,
            synthesis: s,
            history: RingBuffer::new(n)?,
            fft: RealFft::new(n)?,
            features,
            synth_window,
            compensation,
            spectrum: Vec::with_capacity(n / 2 + 1),
            time: Vec::with_capacity(n),
            acc: vec![0.0; s],
            timing: false,
            trace: EvalTrace::default(),
        })
    }

    pub fn with_timing(mut self, on: bool) -> Self {
        self.timing = on;
        self
    }
}

impl<S: MaskSource> HopProcessor for LstwProcessor<S> {
    fn hop(&self) -> usize {
        self.hop
    }

    fn process_hop(&mut self, input: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if input.len() != self.hop {
            return invalid(format!("expected a hop of {} samples, got {}", self.hop, input.len()));
        }
        let t0 = self.timing.then(Instant::now);
        self.history.extend(input);
        let n = self.history.capacity();
        // the extractor keeps the Hamming-windowed spectrum it computed
        let features = self.features.extract(self.history.last(n))?;
        let t1 = self.timing.then(Instant::now);
        let mask = self.source.next_mask(&features)?;
        check_mask(&mask)?;
        let t2 = self.timing.then(Instant::now);

        self.spectrum.clear();
        self.spectrum.extend_from_slice(self.features.spectrum());
        apply_mask(&mut self.spectrum, &mask);
        self.fft.inverse_into(&self.spectrum, &mut self.time)?;
        let tail = &self.time[n - self.synthesis..];
        for (((a, y), c), w) in self
            .acc
            .iter_mut()
            .zip(tail)
            .zip(&self.compensation)
            .zip(self.synth_window.iter())
        {
            *a += y * c * w;
        }
        out.extend_from_slice(&self.acc[..self.hop]);
        self.acc.copy_within(self.hop.., 0);
        let s = self.synthesis;
        self.acc[s - self.hop..].fill(0.0);

        if let (Some(t0), Some(t1), Some(t2)) = (t0, t1, t2) {
            self.trace.timings.push(HopTiming {
                front_end_us: micros(t0, t1),
                inference_us: micros(t1, t2),
                synthesis_us: micros(t2, Instant::now()),
            });
        }
        self.trace.hops += 1;
        Ok(())
    }

    fn trace(&self) -> &EvalTrace {
        &self.trace
    }

    fn structural_delay(&self) -> usize {
        self.synthesis - self.hop
    }
}
