use super::RingBuffer;
use crate::error::{invalid, Result};

/// `y[n] = Σ h[k] x[n-k]` where `x[n]` is the newest sample in `history`.
pub fn direct_convolve(history: &RingBuffer, taps: &[f64]) -> Result<f64> {
    if taps.len() > history.capacity() {
        return invalid(format!(
            "{} taps exceed history capacity {}",
            taps.len(),
            history.capacity()
        ));
    }
    Ok(convolve_at(history.last(taps.len()), taps, taps.len() - 1))
}

/// Convolution output for the sample at `window[newest]`, reading the
/// `taps.len()` samples that end there. `window` is oldest-first.
#[inline]
pub fn convolve_at(window: &[f64], taps: &[f64], newest: usize) -> f64 {
    let start = newest + 1 - taps.len();
    let segment = &window[start..=newest];
    // taps[k] pairs with segment[len-1-k]
    taps.iter()
        .zip(segment.iter().rev())
        .fold(0.0, |acc, (h, x)| acc + h * x)
}
