//! Homomorphic (real-cepstrum) minimum-phase conversion and group-delay
//! measurement.
//!
//! The conversion takes the log magnitude spectrum of the zero-padded taps,
//! folds its real cepstrum onto positive quefrencies and exponentiates back.
//! The resulting filter keeps the magnitude response while concentrating
//! energy in the earliest taps.

use serde::Serialize;

use crate::dsp::{Complex64, RealFft};
use crate::error::{invalid, Error, Result};
use crate::filter::{FirFilter, PhaseKind};
use crate::SAMPLE_RATE;

/// Minimum zero-padding factor over the tap count.
pub const PAD_FACTOR: usize = 4;
/// Padding used when no nfft is given. 4x leaves percent-level magnitude
/// error on filters with stopband zeros on the unit circle; 8x brings a
/// 128-tap windowed-sinc lowpass under 1e-3.
pub const DEFAULT_PAD_FACTOR: usize = 8;

/// Relative floor on the magnitude spectrum before taking the log.
const LOG_FLOOR: f64 = 1e-8;

/// Bins more than 60 dB below the peak are left out of the mean delay.
const GD_EXCLUDE_BELOW: f64 = 1e-3;

/// Smallest power of two that is at least `DEFAULT_PAD_FACTOR * taps`.
pub fn default_nfft(taps: usize) -> usize {
    (DEFAULT_PAD_FACTOR * taps).next_power_of_two().max(8)
}

/// Reusable converter that keeps its FFT plan and work buffers.
#[derive(Debug, Clone)]
pub struct MinPhaseConverter {
    fft: RealFft,
    spec: Vec<Complex64>,
    real: Vec<f64>,
}

impl MinPhaseConverter {
    pub fn new(nfft: usize) -> Result<Self> {
        let fft = RealFft::new(nfft)?;
        if nfft < 4 {
            return invalid("min-phase nfft must be >= 4");
        }
        Ok(Self {
            spec: Vec::with_capacity(fft.bins()),
            real: Vec::with_capacity(nfft),
            fft,
        })
    }

    pub fn nfft(&self) -> usize {
        self.fft.len()
    }

    pub fn convert(&mut self, filter: &FirFilter) -> Result<FirFilter> {
        let taps = filter.len();
        let n = self.fft.len();
        if n < PAD_FACTOR * taps {
            return invalid(format!(
                "nfft {n} is below {PAD_FACTOR}x the tap count {taps}"
            ));
        }
        if filter.is_zero() {
            return Err(Error::DegenerateFilter(
                "all-zero filter has no log spectrum".into(),
            ));
        }

        self.fft.forward_into(filter.taps(), &mut self.spec)?;
        let peak = self.spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let floor = LOG_FLOOR * peak;
        for c in self.spec.iter_mut() {
            *c = Complex64::new(c.norm().max(floor).ln(), 0.0);
        }
        // real cepstrum
        self.fft.inverse_into(&self.spec, &mut self.real)?;

        let half = n / 2;
        for (i, v) in self.real.iter_mut().enumerate() {
            if i > half {
                *v = 0.0;
            } else if i > 0 && i < half {
                *v *= 2.0;
            }
        }

        self.fft.forward_into(&self.real, &mut self.spec)?;
        for c in self.spec.iter_mut() {
            *c = c.exp();
        }
        self.fft.inverse_into(&self.spec, &mut self.real)?;
        self.real.truncate(taps);
        FirFilter::new(self.real.clone(), PhaseKind::Minimum)
    }
}

/// Minimum-phase counterpart of `filter`, computed on an `nfft`-point grid.
pub fn to_minimum_phase(filter: &FirFilter, nfft: usize) -> Result<FirFilter> {
    MinPhaseConverter::new(nfft)?.convert(filter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DelayWeighting {
    Uniform,
    #[default]
    MagnitudeWeighted,
}

/// Per-bin group delay of a filter and its weighted mean.
#[derive(Debug, Clone, Serialize)]
pub struct GroupDelayProfile {
    /// Delay per frequency bin in samples; `NaN` where the response is
    /// numerically zero.
    pub per_bin: Vec<f64>,
    pub mean_samples: f64,
    pub mean_ms: f64,
    pub weighting: DelayWeighting,
}

/// Group delay via `τ(ω) = Re{DFT(n·h[n]) / DFT(h[n])}`, which avoids phase
/// unwrapping. The mean skips bins more than 60 dB below the peak.
pub fn group_delay(
    filter: &FirFilter,
    nfft: usize,
    weighting: DelayWeighting,
) -> Result<GroupDelayProfile> {
    GroupDelayMeter::new(nfft)?.measure(filter, weighting)
}

#[derive(Debug, Clone)]
pub struct GroupDelayMeter {
    fft: RealFft,
    plain: Vec<Complex64>,
    ramp: Vec<Complex64>,
    ramped: Vec<f64>,
}

impl GroupDelayMeter {
    pub fn new(nfft: usize) -> Result<Self> {
        let fft = RealFft::new(nfft)?;
        Ok(Self {
            plain: Vec::with_capacity(fft.bins()),
            ramp: Vec::with_capacity(fft.bins()),
            ramped: Vec::with_capacity(nfft),
            fft,
        })
    }

    pub fn measure(&mut self, filter: &FirFilter, weighting: DelayWeighting) -> Result<GroupDelayProfile> {
        if filter.is_zero() {
            return Err(Error::DegenerateFilter(
                "group delay of an all-zero filter is undefined".into(),
            ));
        }
        let taps = filter.taps();
        self.ramped.clear();
        self.ramped
            .extend(taps.iter().enumerate().map(|(n, h)| n as f64 * h));
        self.fft.forward_into(taps, &mut self.plain)?;
        self.fft.forward_into(&self.ramped, &mut self.ramp)?;

        let peak = self.plain.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cutoff = GD_EXCLUDE_BELOW * peak;
        let mut per_bin = Vec::with_capacity(self.plain.len());
        let (mut acc, mut weight) = (0.0, 0.0);
        for (x, d) in self.plain.iter().zip(&self.ramp) {
            let power = x.norm_sqr();
            if power <= f64::MIN_POSITIVE {
                per_bin.push(f64::NAN);
                continue;
            }
            let tau = (d * x.conj()).re / power;
            per_bin.push(tau);
            let mag = power.sqrt();
            if mag >= cutoff {
                let w = match weighting {
                    DelayWeighting::Uniform => 1.0,
                    DelayWeighting::MagnitudeWeighted => mag,
                };
                acc += w * tau;
                weight += w;
            }
        }
        let mean_samples = acc / weight;
        Ok(GroupDelayProfile {
            per_bin,
            mean_samples,
            mean_ms: samples_to_ms(mean_samples),
            weighting,
        })
    }
}

pub fn samples_to_ms(samples: f64) -> f64 {
    samples / SAMPLE_RATE as f64 * 1000.0
}
