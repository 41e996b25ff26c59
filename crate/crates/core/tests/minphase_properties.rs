//! Minimum-phase properties on filters whose zeros stay away from the unit
//! circle, where the cepstral method is accurate at the default padding.

use deepfir::dsp::rfft;
use deepfir::minphase::{default_nfft, group_delay, to_minimum_phase, DelayWeighting};
use deepfir::{FirFilter, PhaseKind};
use proptest::prelude::*;

/// Polynomial with the given complex-conjugate zero pairs (radius, angle),
/// scaled to a peak tap of one.
fn from_zeros(zeros: &[(f64, f64)]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for &(r, theta) in zeros {
        let section = [1.0, -2.0 * r * theta.cos(), r * r];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, p) in poly.iter().enumerate() {
            for (j, s) in section.iter().enumerate() {
                next[i + j] += p * s;
            }
        }
        poly = next;
    }
    let peak = poly.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    poly.iter().map(|v| v / peak).collect()
}

fn magnitudes(taps: &[f64]) -> Vec<f64> {
    let mut v = taps.to_vec();
    v.resize(16_384, 0.0);
    rfft(&v).unwrap().magnitudes()
}

fn zero() -> impl Strategy<Value = (f64, f64)> {
    let radius = prop_oneof![0.3f64..0.8, 1.25f64..2.0];
    (radius, 0.05f64..3.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conversion_properties(zeros in prop::collection::vec(zero(), 4..16)) {
        let taps = from_zeros(&zeros);
        let n = taps.len();
        let nfft = default_nfft(n);
        let h = FirFilter::new(taps, PhaseKind::LinearIsh).unwrap();
        let m = to_minimum_phase(&h, nfft).unwrap();
        prop_assert_eq!(m.phase(), PhaseKind::Minimum);
        prop_assert_eq!(m.len(), n);

        let (a, b) = (magnitudes(h.taps()), magnitudes(m.taps()));
        let peak = a.iter().cloned().fold(0.0, f64::max);
        let dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / peak;
        prop_assert!(dev < 1e-3, "magnitude deviation {}", dev);

        let mm = to_minimum_phase(&m, nfft).unwrap();
        let idem = mm.taps().iter().zip(m.taps()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(idem < 1e-6, "idempotence {}", idem);

        let (mut eh, mut em) = (0.0, 0.0);
        for (x, y) in h.taps().iter().zip(m.taps()) {
            eh += x * x;
            em += y * y;
            prop_assert!(em >= eh - 1e-6, "prefix energy {} < {}", em, eh);
        }

        let gd_h = group_delay(&h, nfft, DelayWeighting::MagnitudeWeighted).unwrap().mean_samples;
        let gd_m = group_delay(&m, nfft, DelayWeighting::MagnitudeWeighted).unwrap().mean_samples;
        prop_assert!(gd_m <= gd_h + 1e-9, "group delay {} > {}", gd_m, gd_h);
    }

    #[test]
    fn conversion_is_scale_invariant(zeros in prop::collection::vec(zero(), 2..8), g in 1e-3f64..1e3) {
        let taps = from_zeros(&zeros);
        let nfft = default_nfft(taps.len());
        let scaled: Vec<f64> = taps.iter().map(|v| g * v).collect();
        let a = to_minimum_phase(&FirFilter::new(taps, PhaseKind::LinearIsh).unwrap(), nfft).unwrap();
        let b = to_minimum_phase(&FirFilter::new(scaled, PhaseKind::LinearIsh).unwrap(), nfft).unwrap();
        for (x, y) in a.taps().iter().zip(b.taps()) {
            prop_assert!((g * x - y).abs() <= 1e-9 * g);
        }
    }
}

#[test]
fn maximum_phase_section_is_reflected() {
    // zeros outside the circle move to 1/r; the first tap becomes dominant
    let h = from_zeros(&[(2.0, 1.0), (1.6, 2.2)]);
    let f = FirFilter::new(h.clone(), PhaseKind::LinearIsh).unwrap();
    let m = to_minimum_phase(&f, default_nfft(h.len())).unwrap();
    let reflected = from_zeros(&[(0.5, 1.0), (1.0 / 1.6, 2.2)]);
    let scale = m.taps()[0] / reflected[0];
    for (x, y) in m.taps().iter().zip(&reflected) {
        assert!((x - scale * y).abs() < 1e-9, "{x} vs {}", scale * y);
    }
}
