use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{invalid, Result};

/// A window of real gains.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowVec(Vec<f64>);

impl WindowVec {
    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for WindowVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Symmetric Hamming window, `0.54 - 0.46 cos(2πn/(L-1))`. Both edges are 0.08.
pub fn hamming(length: usize) -> Result<WindowVec> {
    if length < 2 {
        return invalid(format!("hamming window needs length >= 2, got {length}"));
    }
    let denom = (length - 1) as f64;
    Ok(WindowVec(
        (0..length)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
            .collect(),
    ))
}

/// Rising and falling halves of a Hann window for crossfading over one hop.
///
/// `rise[n] = 0.5 (1 - cos(π (n+1) / L))` so the incoming filter reaches
/// gain 1 on the last sample of the hop; `fall = 1 - rise` exactly.
pub fn hann_crossfade(length: usize) -> Result<(WindowVec, WindowVec)> {
    if length == 0 {
        return invalid("crossfade length must be >= 1");
    }
    let l = length as f64;
    let rise: Vec<f64> = (0..length)
        .map(|n| 0.5 * (1.0 - (PI * (n + 1) as f64 / l).cos()))
        .collect();
    let fall = rise.iter().map(|r| 1.0 - r).collect();
    Ok((WindowVec(rise), WindowVec(fall)))
}

/// Square root of the periodic Hann window. Its square overlap-adds to
/// exactly one at 50% overlap.
pub fn sqrt_hann(length: usize) -> Result<WindowVec> {
    if length < 2 || !length.is_multiple_of(2) {
        return invalid(format!("sqrt-hann window needs an even length >= 2, got {length}"));
    }
    let l = length as f64;
    Ok(WindowVec(
        (0..length)
            .map(|n| (0.5 * (1.0 - (2.0 * PI * n as f64 / l).cos())).sqrt())
            .collect(),
    ))
}
