//! Signal-processing primitives shared by the feature front-end, the FIR
//! engine, the mask baselines and the metrics.

mod conv;
mod fft;
mod ring;
mod window;

pub use conv::{convolve_at, direct_convolve};
pub use fft::{irfft, rfft, ComplexSpectrum, RealFft};
pub use ring::RingBuffer;
pub use window::{hamming, hann_crossfade, sqrt_hann, WindowVec};

pub use rustfft::num_complex::Complex64;
