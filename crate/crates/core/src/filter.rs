use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Result};

/// Default tap count of predicted filters.
pub const DEFAULT_TAPS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseKind {
    /// Straight from the network; trained against a half-length delayed
    /// target, so close to linear phase.
    LinearIsh,
    Minimum,
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseKind::LinearIsh => f.write_str("linear-ish"),
            PhaseKind::Minimum => f.write_str("minimum"),
        }
    }
}

/// Real FIR taps plus the phase regime they were produced in.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    phase: PhaseKind,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>, phase: PhaseKind) -> Result<Self> {
        if taps.is_empty() {
            return invalid("filter needs at least one tap");
        }
        if let Some(i) = taps.iter().position(|t| !t.is_finite()) {
            return invalid(format!("tap {i} is not finite"));
        }
        Ok(Self { taps, phase })
    }

    /// Pass-through filter `[1, 0, ..., 0]`.
    pub fn impulse(len: usize) -> Self {
        Self::delay(len, 0)
    }

    /// Pure `k`-sample delay. Panics if `k >= len`.
    pub fn delay(len: usize, k: usize) -> Self {
        assert!(k < len, "delay {k} does not fit {len} taps");
        let mut taps = vec![0.0; len];
        taps[k] = 1.0;
        Self {
            taps,
            phase: PhaseKind::LinearIsh,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn phase(&self) -> PhaseKind {
        self.phase
    }

    pub fn is_zero(&self) -> bool {
        self.taps.iter().all(|&t| t == 0.0)
    }
}
