//! Geometric reference labels for the three-tone signal, used to score the
//! classifier.
//!
//! * first kind: frequency within `band` of a midpoint between adjacent tones;
//! * third kind: within distance `r` of the cells where the noiseless
//!   spectrogram reaches the noise variance (the level-curve interior);
//! * second kind: everything else.

use super::{ball_offsets, ZeroKind};
use crate::error::Result;
use crate::signals::{Signal, ToneTriplet};
use crate::tf::{level_curve_mask, Mask, StftPlan, ZeroSet};

/// Default half-width of the first-kind band, in units of `1/T` (cycles per
/// sample times `T`).
pub const DEFAULT_BAND: f64 = 0.125;

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Midpoint frequencies in (fractional) bins.
    pub midpoint_bins: Vec<f64>,
    /// Half-width of the first-kind band in bins.
    pub band_bins: f64,
    pub interior: Mask,
    pub radius: f64,
}

impl GroundTruth {
    /// Reference for `triple_tone(spec)` observed in white noise of
    /// per-sample variance `noise_var`.
    pub fn triple_tone(
        spec: &ToneTriplet,
        clean: &Signal,
        noise_var: f64,
        plan: &StftPlan,
        radius: f64,
        band: f64,
    ) -> Result<Self> {
        let n_fft = plan.n_fft() as f64;
        let fs = clean.fs();
        let midpoint_bins = spec.midpoints(fs).iter().map(|f| f / fs * n_fft).collect();
        let band_bins = band * n_fft / plan.window().width();
        let interior = level_curve_mask(&plan.spectrogram(clean), noise_var)?;
        Ok(Self {
            midpoint_bins,
            band_bins,
            interior,
            radius,
        })
    }

    pub fn labels(&self, zeros: &ZeroSet) -> Vec<ZeroKind> {
        let offsets = ball_offsets(self.radius);
        let (n_freq, n_time) = self.interior.shape();
        zeros
            .coords
            .iter()
            .map(|z| {
                let q = z.q as f64;
                if self
                    .midpoint_bins
                    .iter()
                    .any(|m| (q - m).abs() <= self.band_bins)
                {
                    return ZeroKind::First;
                }
                let near_interior = offsets.iter().any(|&(dn, dq)| {
                    let n = z.n as isize + dn;
                    let q = z.q as isize + dq;
                    n >= 0
                        && q >= 0
                        && (n as usize) < n_time
                        && (q as usize) < n_freq
                        && *self.interior.get(q as usize, n as usize)
                });
                if near_interior {
                    ZeroKind::Third
                } else {
                    ZeroKind::Second
                }
            })
            .collect()
    }
}

/// Fraction of equal labels; 1 for empty inputs.
pub fn accuracy(predicted: &[ZeroKind], truth: &[ZeroKind]) -> f64 {
    assert_eq!(
        predicted.len(),
        truth.len(),
        "label vectors differ in length"
    );
    if truth.is_empty() {
        return 1.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}
