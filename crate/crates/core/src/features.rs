//! Compressed-magnitude spectral features, computed once per hop from the
//! newest analysis window.

use crate::dsp::{hamming, Complex64, RealFft, WindowVec};
use crate::error::{invalid, Result};

/// Analysis window length in samples (16 ms at 16 kHz).
pub const ANALYSIS_WINDOW: usize = 256;
/// Feature dimension: `ANALYSIS_WINDOW / 2 + 1`.
pub const FEATURE_DIM: usize = ANALYSIS_WINDOW / 2 + 1;
/// Magnitude compression exponent.
pub const COMPRESSION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Hamming-windowed FFT front-end with a reusable plan.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    window: WindowVec,
    fft: RealFft,
    windowed: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        Self {
            window: hamming(ANALYSIS_WINDOW).expect("static window length"),
            fft: RealFft::new(ANALYSIS_WINDOW).expect("static fft size"),
            windowed: vec![0.0; ANALYSIS_WINDOW],
            spectrum: Vec::with_capacity(FEATURE_DIM),
        }
    }

    /// `|rfft(hamming ⊙ frame)|^0.3`.
    pub fn extract(&mut self, frame: &[f64]) -> Result<FeatureVector> {
        self.analyze(frame)?;
        Ok(FeatureVector(
            self.spectrum
                .iter()
                .map(|c| c.norm().powf(COMPRESSION))
                .collect(),
        ))
    }

    /// Windowed spectrum of the last analyzed frame.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn window(&self) -> &WindowVec {
        &self.window
    }

    fn analyze(&mut self, frame: &[f64]) -> Result<()> {
        if frame.len() != ANALYSIS_WINDOW {
            return invalid(format!(
                "feature frame must be {ANALYSIS_WINDOW} samples, got {}",
                frame.len()
            ));
        }
        for ((d, s), w) in self.windowed.iter_mut().zip(frame).zip(self.window.iter()) {
            *d = s * w;
        }
        self.fft.forward_into(&self.windowed, &mut self.spectrum)
    }
}

pub fn extract_features(frame: &[f64]) -> Result<FeatureVector> {
    FeatureExtractor::new().extract(frame)
}
