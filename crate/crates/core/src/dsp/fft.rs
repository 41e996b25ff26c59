use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

/// Half spectrum of a real signal: `N/2 + 1` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub bins: Vec<Complex64>,
}

impl ComplexSpectrum {
    /// Length of the real signal this spectrum describes.
    pub fn signal_len(&self) -> usize {
        (self.bins.len() - 1) * 2
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm()).collect()
    }
}

/// Planned real-input FFT of a fixed power-of-two size.
///
/// Holds its own scratch so repeated transforms on the streaming path do
/// not allocate plans.
#[derive(Clone)]
pub struct RealFft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for RealFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFft").field("len", &self.len).finish()
    }
}

#[allow(clippy::len_without_is_empty)] // never empty: length is a power of two >= 2
impl RealFft {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return invalid(format!("fft size must be a power of two >= 2, got {len}"));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            len,
            forward,
            inverse,
            buf: vec![Complex64::default(); len],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn bins(&self) -> usize {
        self.len / 2 + 1
    }

    /// Forward transform of `signal`, zero-padded to the plan size.
    pub fn forward_into(&mut self, signal: &[f64], out: &mut Vec<Complex64>) -> Result<()> {
        if signal.len() > self.len {
            return invalid(format!(
                "signal of {} samples does not fit fft size {}",
                signal.len(),
                self.len
            ));
        }
        for (b, s) in self.buf.iter_mut().zip(signal.iter().chain(std::iter::repeat(&0.0))) {
            *b = Complex64::new(*s, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        out.clear();
        out.extend_from_slice(&self.buf[..self.bins()]);
        // exact zeros where real input forces them
        out[0].im = 0.0;
        let last = out.len() - 1;
        out[last].im = 0.0;
        Ok(())
    }

    pub fn forward(&mut self, signal: &[f64]) -> Result<ComplexSpectrum> {
        let mut bins = Vec::with_capacity(self.bins());
        self.forward_into(signal, &mut bins)?;
        Ok(ComplexSpectrum { bins })
    }

    /// Inverse transform of a half spectrum (Hermitian extension implied),
    /// scaled by `1/N` so `inverse(forward(x)) == x`.
    pub fn inverse_into(&mut self, bins: &[Complex64], out: &mut Vec<f64>) -> Result<()> {
        let half = self.bins();
        if bins.len() != half {
            return invalid(format!(
                "inverse fft of size {} needs {} bins, got {}",
                self.len,
                half,
                bins.len()
            ));
        }
        let n = self.len;
        self.buf[..half].copy_from_slice(bins);
        self.buf[0].im = 0.0;
        self.buf[half - 1].im = 0.0;
        for k in half..n {
            self.buf[k] = bins[n - k].conj();
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        out.clear();
        out.extend(self.buf.iter().map(|c| c.re * scale));
        Ok(())
    }

    pub fn inverse(&mut self, spectrum: &ComplexSpectrum) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len);
        self.inverse_into(&spectrum.bins, &mut out)?;
        Ok(out)
    }
}

/// One-shot real FFT. `signal.len()` must be a power of two.
pub fn rfft(signal: &[f64]) -> Result<ComplexSpectrum> {
    RealFft::new(signal.len())?.forward(signal)
}

/// One-shot inverse of [`rfft`].
pub fn irfft(spectrum: &ComplexSpectrum) -> Result<Vec<f64>> {
    if spectrum.bins.len() < 2 {
        return invalid("inverse fft needs at least 2 bins");
    }
    RealFft::new(spectrum.signal_len())?.inverse(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn impulse_is_flat() {
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        let s = rfft(&x).unwrap();
        assert_eq!(s.bins.len(), 5);
        for b in &s.bins {
            assert!((b - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn ones_is_dc_only() {
        let s = rfft(&[1.0; 8]).unwrap();
        assert!((s.bins[0].re - 8.0).abs() < 1e-12);
        for b in &s.bins[1..] {
            assert!(b.norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(rfft(&[0.0; 6]).is_err());
        assert!(rfft(&[0.0; 1]).is_err());
        assert!(RealFft::new(100).is_err());
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [8usize, 256, 512] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = rfft(&x).unwrap();
            let y = irfft(&s).unwrap();
            let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n} err={err}");

            let time: f64 = x.iter().map(|v| v * v).sum();
            // full spectrum energy from the half spectrum
            let mut freq = s.bins[0].norm_sqr() + s.bins[n / 2].norm_sqr();
            freq += 2.0 * s.bins[1..n / 2].iter().map(|c| c.norm_sqr()).sum::<f64>();
            freq /= n as f64;
            assert!((time - freq).abs() / time < 1e-6);
        }
    }

    #[test]
    fn real_input_edges_have_zero_imag() {
        let x = [0.3, -1.0, 2.0, 0.5, 0.1, 0.0, -0.7, 0.9];
        let s = rfft(&x).unwrap();
        assert_eq!(s.bins[0].im, 0.0);
        assert_eq!(s.bins[4].im, 0.0);
    }

    #[test]
    fn zero_pads_short_input() {
        let mut plan = RealFft::new(16).unwrap();
        let s = plan.forward(&[1.0, 1.0]).unwrap();
        let y = plan.inverse(&s).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14 && (y[1] - 1.0).abs() < 1e-14);
        assert!(y[2..].iter().all(|v| v.abs() < 1e-14));
        assert!(plan.forward(&[0.0; 17]).is_err());
    }
}
