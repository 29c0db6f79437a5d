//! Test signals, white Gaussian noise and SNR-controlled mixing.
//!
//! Frequencies are expressed in the same unit as the sampling rate `fs`
//! (cycles per sample with the default `fs = 1`).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("signal must contain at least one sample"));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(invalid(format!("sampling rate must be positive, got {fs}")));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, fs })
    }

    /// Signal with the normalized sampling rate `fs = 1`.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, 1.0)
    }

    pub fn zeros(n: usize, fs: f64) -> Result<Self> {
        Self::new(vec![0.0; n], fs)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Squared ℓ₂ norm, `Σ x[m]²`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Elementwise sum of two signals of equal length.
    pub fn add(&self, other: &Signal) -> Result<Signal> {
        if self.len() != other.len() {
            return Err(invalid(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Signal {
            samples,
            fs: self.fs,
        })
    }

    pub fn scaled(&self, c: f64) -> Signal {
        Signal {
            samples: self.samples.iter().map(|v| v * c).collect(),
            fs: self.fs,
        }
    }
}

/// Parameters of one white Gaussian noise realization.
///
/// `(seed, stream_index)` selects an independent ChaCha stream, so
/// realization `j` can be regenerated in isolation and in any order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
    pub stream_index: u64,
}

impl NoiseSpec {
    pub fn new(variance: f64, seed: u64, stream_index: u64) -> Self {
        Self {
            variance,
            seed,
            stream_index,
        }
    }
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// I.i.d. `Normal(0, variance)` samples from the stream `(seed, stream_index)`.
pub fn white_gaussian_noise(n: usize, spec: NoiseSpec) -> Result<Signal> {
    if n == 0 {
        return Err(invalid("noise length must be at least 1"));
    }
    if !(spec.variance >= 0.0 && spec.variance.is_finite()) {
        return Err(invalid(format!(
            "noise variance must be finite and non-negative, got {}",
            spec.variance
        )));
    }
    let std = spec.variance.sqrt();
    let mut rng = stream_rng(spec.seed, spec.stream_index);
    let samples = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            std * z
        })
        .collect();
    Signal::new(samples, 1.0)
}

fn check_band(f: f64, fs: f64, what: &str) -> Result<()> {
    if !(f > 0.0 && f < fs / 2.0) {
        return Err(invalid(format!(
            "{what} = {f} must lie in (0, fs/2) = (0, {})",
            fs / 2.0
        )));
    }
    Ok(())
}

/// Unit-amplitude cosine whose instantaneous frequency moves linearly from
/// `f_start` (first sample) to `f_end` (last sample).
pub fn linear_chirp(f_start: f64, f_end: f64, n: usize, fs: f64) -> Result<Signal> {
    if n == 0 {
        return Err(invalid("chirp length must be at least 1"));
    }
    check_band(f_start, fs, "f_start")?;
    check_band(f_end, fs, "f_end")?;
    let duration = (n.max(2) - 1) as f64 / fs;
    let rate = (f_end - f_start) / duration;
    let samples = (0..n)
        .map(|m| {
            let t = m as f64 / fs;
            (2.0 * PI * (f_start * t + 0.5 * rate * t * t)).cos()
        })
        .collect();
    Signal::new(samples, fs)
}

/// Three equispaced tones `f2 - Δf`, `f2`, `f2 + Δf` with
/// `Δf = θ / (T √(2π))`, `T` being the Gaussian window width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneTriplet {
    pub f2: f64,
    pub theta: f64,
    /// Window width `T` in samples.
    pub window_width: f64,
}

impl ToneTriplet {
    pub fn new(f2: f64, theta: f64, window_width: f64) -> Self {
        Self {
            f2,
            theta,
            window_width,
        }
    }

    /// Tone separation for a given sampling rate.
    pub fn delta_f(&self, fs: f64) -> f64 {
        self.theta * fs / (self.window_width * (2.0 * PI).sqrt())
    }

    pub fn frequencies(&self, fs: f64) -> [f64; 3] {
        let d = self.delta_f(fs);
        [self.f2 - d, self.f2, self.f2 + d]
    }

    /// Frequencies of the deterministic zeros between adjacent tones.
    pub fn midpoints(&self, fs: f64) -> [f64; 2] {
        let [f1, f2, f3] = self.frequencies(fs);
        [0.5 * (f1 + f2), 0.5 * (f2 + f3)]
    }

    /// Times `(k + 1/2)/Δf` (in samples) of the deterministic zeros that fall
    /// in `[0, n)`.
    pub fn zero_times(&self, n: usize, fs: f64) -> Vec<f64> {
        let period = fs / self.delta_f(fs);
        (0..)
            .map(|k| (k as f64 + 0.5) * period)
            .take_while(|&t| t < n as f64)
            .collect()
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.theta > 0.0 && self.window_width > 0.0) {
            return Err(invalid("theta and window width must be positive"));
        }
        let [f1, _, f3] = self.frequencies(fs);
        check_band(f1, fs, "f1")?;
        check_band(f3, fs, "f3")
    }
}

/// `cos(2π f1 t) + cos(2π f2 t) + cos(2π f3 t)`, zero phases.
pub fn triple_tone(spec: &ToneTriplet, n: usize, fs: f64) -> Result<Signal> {
    if n == 0 {
        return Err(invalid("signal length must be at least 1"));
    }
    spec.validate(fs)?;
    let freqs = spec.frequencies(fs);
    let samples = (0..n)
        .map(|m| {
            let t = m as f64 / fs;
            freqs.iter().map(|f| (2.0 * PI * f * t).cos()).sum()
        })
        .collect();
    Signal::new(samples, fs)
}

/// Result of [`mix_at_snr`].
#[derive(Debug, Clone)]
pub struct Mixture {
    pub mixture: Signal,
    /// The rescaled noise actually added.
    pub noise: Signal,
    /// `‖ξ‖₂²` of the added noise; `10 log10(‖x‖₂² / noise_energy)` is the SNR.
    pub noise_energy: f64,
    /// Per-sample standard deviation `sqrt(noise_energy / n)`.
    pub noise_std: f64,
}

/// Rescales `noise` so that `10 log10(‖x‖² / ‖noise‖²) = snr_db` exactly and
/// adds it to `x`.
pub fn mix_at_snr(x: &Signal, noise: &Signal, snr_db: f64) -> Result<Mixture> {
    if x.len() != noise.len() {
        return Err(invalid(format!(
            "signal and noise lengths differ: {} vs {}",
            x.len(),
            noise.len()
        )));
    }
    if !snr_db.is_finite() {
        return Err(invalid("snr must be finite"));
    }
    let signal_energy = x.energy();
    if signal_energy <= 0.0 {
        return Err(invalid("signal has zero energy"));
    }
    let raw_energy = noise.energy();
    if raw_energy <= 0.0 {
        return Err(invalid("noise has zero energy"));
    }
    let target = signal_energy / 10f64.powf(snr_db / 10.0);
    let noise = noise.scaled((target / raw_energy).sqrt());
    let noise_energy = noise.energy();
    let mixture = x.add(&noise)?;
    Ok(Mixture {
        mixture,
        noise_std: (noise_energy / x.len() as f64).sqrt(),
        noise,
        noise_energy,
    })
}

/// `10 log10(‖x‖² / noise_energy)`.
pub fn snr_db(signal_energy: f64, noise_energy: f64) -> f64 {
    10.0 * (signal_energy / noise_energy).log10()
}
