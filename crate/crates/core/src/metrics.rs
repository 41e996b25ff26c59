//! Reference-based evaluation: SI-SDR, SI-SDR improvement, and the
//! compressed spectral loss on short-time spectra.

use serde::Serialize;

use crate::dsp::{sqrt_hann, Complex64, RealFft};
use crate::error::{invalid, Result};

pub const STFT_WINDOW: usize = 256;
pub const STFT_HOP: usize = 128;
/// SI-SDR values are clamped to `±SI_SDR_LIMIT_DB`.
pub const SI_SDR_LIMIT_DB: f64 = 60.0;

/// Complex short-time spectrum of one signal, `frames[t][f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pub window: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_bins(&self) -> usize {
        self.frames.first().map_or(0, |f| f.len())
    }
}

/// Spectrograms indexed by batch entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramBatch(pub Vec<Spectrogram>);

impl SpectrogramBatch {
    fn shape(&self) -> Vec<(usize, usize)> {
        self.0.iter().map(|s| (s.num_frames(), s.num_bins())).collect()
    }
}

/// Frames of `window` samples every `hop`, square-root-Hann weighted.
/// Frame count is `1 + (len - window) / hop`; a trailing remainder is dropped.
pub fn stft_with(signal: &[f64], window: usize, hop: usize) -> Result<Spectrogram> {
    if hop == 0 {
        return invalid("stft hop must be >= 1");
    }
    if signal.len() < window {
        return invalid(format!(
            "signal of {} samples is shorter than the {window}-sample window",
            signal.len()
        ));
    }
    let w = sqrt_hann(window)?;
    let mut fft = RealFft::new(window)?;
    let count = 1 + (signal.len() - window) / hop;
    let mut buf = vec![0.0; window];
    let mut frames = Vec::with_capacity(count);
    for t in 0..count {
        let seg = &signal[t * hop..t * hop + window];
        for ((b, s), g) in buf.iter_mut().zip(seg).zip(w.iter()) {
            *b = s * g;
        }
        let mut bins = Vec::with_capacity(fft.bins());
        fft.forward_into(&buf, &mut bins)?;
        frames.push(bins);
    }
    Ok(Spectrogram { frames, window, hop })
}

/// 256-sample square-root-Hann frames with hop 128.
pub fn stft(signal: &[f64]) -> Result<Spectrogram> {
    stft_with(signal, STFT_WINDOW, STFT_HOP)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.85,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return invalid(format!("alpha must be in (0, 1], got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return invalid(format!("beta must be in [0, 1], got {}", self.beta));
        }
        Ok(())
    }
}

/// `|S|^α e^{j∠S}`, zero at zero magnitude.
fn compress(c: Complex64, alpha: f64) -> Complex64 {
    let mag = c.norm();
    if mag == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        c * (mag.powf(alpha) / mag)
    }
}

/// Σ over batch, frequency and time of
/// `(1-β)(|R|^α - |E|^α)² + β|R^α - E^α|²` where `X^α = |X|^α e^{j∠X}`.
pub fn compressed_spectral_loss(
    reference: &SpectrogramBatch,
    estimate: &SpectrogramBatch,
    cfg: &LossConfig,
) -> Result<f64> {
    cfg.validate()?;
    if reference.shape() != estimate.shape() {
        return invalid(format!(
            "spectrogram shapes differ: {:?} vs {:?}",
            reference.shape(),
            estimate.shape()
        ));
    }
    let mut total = 0.0;
    for (r, e) in reference.0.iter().zip(&estimate.0) {
        for (rf, ef) in r.frames.iter().zip(&e.frames) {
            for (&a, &b) in rf.iter().zip(ef) {
                let ca = compress(a, cfg.alpha);
                let cb = compress(b, cfg.alpha);
                let mag = ca.norm() - cb.norm();
                total += (1.0 - cfg.beta) * mag * mag + cfg.beta * (ca - cb).norm_sqr();
            }
        }
    }
    Ok(total)
}

/// Loss between two time signals using the default STFT.
pub fn signal_loss(reference: &[f64], estimate: &[f64], cfg: &LossConfig) -> Result<f64> {
    if reference.len() != estimate.len() {
        return invalid("loss signals must have equal length");
    }
    let r = SpectrogramBatch(vec![stft(reference)?]);
    let e = SpectrogramBatch(vec![stft(estimate)?]);
    compressed_spectral_loss(&r, &e, cfg)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale-invariant SDR in dB, clamped to ±60 dB.
pub fn si_sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() || reference.is_empty() {
        return invalid(format!(
            "si-sdr needs equal nonzero lengths, got {} and {}",
            reference.len(),
            estimate.len()
        ));
    }
    let ref_energy = dot(reference, reference);
    if ref_energy == 0.0 {
        return invalid("si-sdr reference is all zeros");
    }
    let scale = dot(estimate, reference) / ref_energy;
    let target_energy = scale * scale * ref_energy;
    let residual: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| {
            let d = e - scale * r;
            d * d
        })
        .sum();
    let db = if residual == 0.0 {
        SI_SDR_LIMIT_DB
    } else if target_energy == 0.0 {
        -SI_SDR_LIMIT_DB
    } else {
        10.0 * (target_energy / residual).log10()
    };
    Ok(db.clamp(-SI_SDR_LIMIT_DB, SI_SDR_LIMIT_DB))
}

/// `si_sdr(reference, estimate) - si_sdr(reference, mix)`.
pub fn si_sdr_improvement(mix: &[f64], reference: &[f64], estimate: &[f64]) -> Result<f64> {
    Ok(si_sdr(reference, estimate)? - si_sdr(reference, mix)?)
}

/// Compare `estimate[n + lag]` with `reference[n]`, dropping the samples
/// that fall outside either signal. Negative lags shift the other way.
pub fn align(reference: &[f64], estimate: &[f64], lag: isize) -> (Vec<f64>, Vec<f64>) {
    let len = reference.len().min(estimate.len()) as isize;
    let (r0, e0, n) = if lag >= 0 {
        (0, lag, len - lag)
    } else {
        (-lag, 0, len + lag)
    };
    if n <= 0 {
        return (Vec::new(), Vec::new());
    }
    let (r0, e0, n) = (r0 as usize, e0 as usize, n as usize);
    (
        reference[r0..r0 + n].to_vec(),
        estimate[e0..e0 + n].to_vec(),
    )
}

/// Lag in `[-max_lag, max_lag]` maximizing the normalized correlation
/// between the aligned signals. Ties resolve to the smallest absolute lag.
pub fn best_lag(reference: &[f64], estimate: &[f64], max_lag: usize) -> isize {
    let mut best = (0isize, f64::NEG_INFINITY);
    let max = max_lag as isize;
    let mut lags: Vec<isize> = (-max..=max).collect();
    lags.sort_by_key(|l| l.abs());
    for lag in lags {
        let (r, e) = align(reference, estimate, lag);
        if r.is_empty() {
            continue;
        }
        let norm = (dot(&r, &r) * dot(&e, &e)).sqrt();
        if norm == 0.0 {
            continue;
        }
        let score = dot(&r, &e) / norm;
        if score > best.1 {
            best = (lag, score);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_bin(c: Complex64) -> SpectrogramBatch {
        SpectrogramBatch(vec![Spectrogram {
            frames: vec![vec![c]],
            window: 0,
            hop: 0,
        }])
    }

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn frame_count_and_zero_signal() {
        let s = stft(&[0.0; 512]).unwrap();
        assert_eq!(s.num_frames(), 3);
        assert_eq!(s.num_bins(), 129);
        assert!(s.frames.iter().flatten().all(|c| c.norm() == 0.0));
        assert!(stft(&[0.0; 255]).is_err());
        assert_eq!(stft(&[0.0; 700]).unwrap().num_frames(), 1 + (700 - 256) / 128);
    }

    #[test]
    fn per_frame_parseval() {
        let x = noise(1024, 1);
        let s = stft(&x).unwrap();
        let w = sqrt_hann(256).unwrap();
        for (t, frame) in s.frames.iter().enumerate() {
            let time: f64 = x[t * 128..t * 128 + 256]
                .iter()
                .zip(w.iter())
                .map(|(v, g)| (v * g).powi(2))
                .sum();
            let freq = (frame[0].norm_sqr()
                + frame[128].norm_sqr()
                + 2.0 * frame[1..128].iter().map(|c| c.norm_sqr()).sum::<f64>())
                / 256.0;
            assert!((time - freq).abs() / time < 1e-6);
        }
    }

    #[test]
    fn loss_worked_examples() {
        let cfg = LossConfig::default();
        let one = single_bin(Complex64::new(1.0, 0.0));
        let zero = single_bin(Complex64::new(0.0, 0.0));
        let flipped = single_bin(Complex64::new(-1.0, 0.0));
        assert_eq!(compressed_spectral_loss(&one, &one, &cfg).unwrap(), 0.0);
        for alpha in [0.1, 0.3, 1.0] {
            let c = LossConfig { alpha, beta: 0.85 };
            let l = compressed_spectral_loss(&zero, &one, &c).unwrap();
            assert!((l - 1.0).abs() < 1e-12);
        }
        let l = compressed_spectral_loss(&one, &flipped, &cfg).unwrap();
        assert!((l - 3.4).abs() < 1e-9);
    }

    #[test]
    fn loss_rejects_shape_mismatch_and_bad_config() {
        let a = SpectrogramBatch(vec![stft(&[0.0; 512]).unwrap()]);
        let b = SpectrogramBatch(vec![stft(&[0.0; 640]).unwrap()]);
        assert!(compressed_spectral_loss(&a, &b, &LossConfig::default()).is_err());
        let bad = LossConfig { alpha: 0.0, beta: 0.5 };
        assert!(compressed_spectral_loss(&a, &a, &bad).is_err());
        let bad = LossConfig { alpha: 0.3, beta: 1.5 };
        assert!(compressed_spectral_loss(&a, &a, &bad).is_err());
    }

    #[test]
    fn beta_zero_ignores_phase() {
        let x = noise(1024, 2);
        let r = SpectrogramBatch(vec![stft(&x).unwrap()]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut e = r.clone();
        for c in e.0[0].frames.iter_mut().flatten() {
            *c = Complex64::from_polar(c.norm(), rng.gen_range(-3.1..3.1));
        }
        let cfg = LossConfig { alpha: 0.3, beta: 0.0 };
        assert!(compressed_spectral_loss(&r, &e, &cfg).unwrap() < 1e-20);
        assert!(compressed_spectral_loss(&r, &e, &LossConfig::default()).unwrap() > 1.0);
    }

    #[test]
    fn si_sdr_examples() {
        let r = noise(4000, 4);
        let twice: Vec<f64> = r.iter().map(|v| 2.0 * v).collect();
        assert_eq!(si_sdr(&r, &twice).unwrap(), 60.0);

        // orthogonal noise of equal power: Gram-Schmidt against r
        let mut n = noise(4000, 5);
        let p = dot(&n, &r) / dot(&r, &r);
        for (v, rv) in n.iter_mut().zip(&r) {
            *v -= p * rv;
        }
        let g = (dot(&r, &r) / dot(&n, &n)).sqrt();
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + g * b).collect();
        assert!(si_sdr(&r, &est).unwrap().abs() < 0.01);

        let ortho: Vec<f64> = n.iter().map(|v| v * g).collect();
        assert!(si_sdr(&r, &ortho).unwrap() <= -40.0);
    }

    #[test]
    fn si_sdr_errors_and_improvement() {
        assert!(si_sdr(&[0.0; 4], &[1.0; 4]).is_err());
        assert!(si_sdr(&[1.0; 4], &[1.0; 3]).is_err());
        assert!(si_sdr(&[], &[]).is_err());
        let r = noise(1000, 6);
        let mix: Vec<f64> = r.iter().zip(noise(1000, 7)).map(|(a, b)| a + b).collect();
        let est: Vec<f64> = r.iter().zip(noise(1000, 8)).map(|(a, b)| a + 0.1 * b).collect();
        let imp = si_sdr_improvement(&mix, &r, &est).unwrap();
        assert!((imp - (si_sdr(&r, &est).unwrap() - si_sdr(&r, &mix).unwrap())).abs() < 1e-12);
        assert!(imp > 10.0);
    }

    #[test]
    fn best_lag_finds_delay() {
        let r = noise(2000, 9);
        let mut est = vec![0.0; 37];
        est.extend_from_slice(&r[..2000 - 37]);
        assert_eq!(best_lag(&r, &est, 128), 37);
        let (a, b) = align(&r, &est, 37);
        assert_eq!(a.len(), 2000 - 37);
        assert!(si_sdr(&a, &b).unwrap() == 60.0);
        assert_eq!(best_lag(&est, &r, 128), -37);
    }

    proptest! {
        #[test]
        fn si_sdr_scale_invariant(seed in 0u64..1000, g in prop_oneof![-10.0f64..-0.01, 0.01f64..10.0]) {
            let r = noise(256, seed);
            let e: Vec<f64> = r.iter().zip(noise(256, seed + 1)).map(|(a, b)| a + 0.3 * b).collect();
            let scaled: Vec<f64> = e.iter().map(|v| g * v).collect();
            let a = si_sdr(&r, &e).unwrap();
            let b = si_sdr(&r, &scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn loss_shrinks_toward_reference(seed in 0u64..500) {
            let r = noise(512, seed);
            let e = noise(512, seed + 1000);
            let cfg = LossConfig::default();
            let mut last = f64::INFINITY;
            for step in 0..=4 {
                let t = step as f64 / 5.0;
                let mid: Vec<f64> = r.iter().zip(&e).map(|(a, b)| t * a + (1.0 - t) * b).collect();
                let l = signal_loss(&r, &mid, &cfg).unwrap();
                prop_assert!(l >= 0.0);
                prop_assert!(l < last);
                last = l;
            }
            prop_assert_eq!(signal_loss(&r, &r, &cfg).unwrap(), 0.0);
        }
    }
}
