//! Gaussian-window STFT on a hop-1 grid, spectrogram zeros and masked
//! inversion.
//!
//! The transform is
//!
//! ```text
//! V[n, q] = Σ_{m = n-L}^{n+L} x[m] g[m - n] exp(-2iπ q m / N)
//! ```
//!
//! evaluated for every time sample `n` and the one-sided frequency bins
//! `q = 0..=N/2`. Samples outside the signal are taken as zero. The phase is
//! referenced to absolute time `m`, so the transform of a real signal is
//! conjugate symmetric in `q` with no frame-dependent modulation.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signals::Signal;

/// Truncation level `e^{-9π}`: the window is cut where it falls below
/// `exp(-π (3T)² / T²)` of its peak.
pub const DEFAULT_EPS_TRUNC: f64 = 5.255_485_176_006_454e-13;

/// Dense matrix indexed by `(q, n)`: frequency row, time column.
///
/// Storage is time-major so one STFT frame is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    n_freq: usize,
    n_time: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(n_freq: usize, n_time: usize, value: T) -> Self {
        Self {
            n_freq,
            n_time,
            data: vec![value; n_freq * n_time],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_fn(n_freq: usize, n_time: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n_freq * n_time);
        for n in 0..n_time {
            for q in 0..n_freq {
                data.push(f(q, n));
            }
        }
        Self {
            n_freq,
            n_time,
            data,
        }
    }

    /// `(n_freq, n_time)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_freq, self.n_time)
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    #[inline]
    pub fn get(&self, q: usize, n: usize) -> &T {
        &self.data[n * self.n_freq + q]
    }

    #[inline]
    pub fn get_mut(&mut self, q: usize, n: usize) -> &mut T {
        &mut self.data[n * self.n_freq + q]
    }

    #[inline]
    pub fn set(&mut self, q: usize, n: usize, value: T) {
        self.data[n * self.n_freq + q] = value;
    }

    /// All bins of time frame `n`.
    pub fn column(&self, n: usize) -> &[T] {
        &self.data[n * self.n_freq..(n + 1) * self.n_freq]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            n_freq: self.n_freq,
            n_time: self.n_time,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Row-major rows in ascending frequency.
    pub fn rows(&self) -> impl Iterator<Item = impl Iterator<Item = &T> + '_> + '_ {
        (0..self.n_freq).map(move |q| (0..self.n_time).map(move |n| self.get(q, n)))
    }

    pub(crate) fn data(&self) -> &[T] {
        &self.data
    }
}

pub type Mask = Grid<bool>;

impl Mask {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Sampled unit-energy Gaussian `g(t) = 2^{1/4}/√T · exp(-π t²/T²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWindow {
    width: f64,
    half_width: usize,
    samples: Vec<f64>,
}

impl GaussianWindow {
    /// Width parameter `T` in samples.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Half-width `L`; the window has `2L + 1` samples.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Samples `g[-L..=L]`, centre at index `L`.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `g[k]` for `|k| <= L`.
    pub fn at(&self, k: isize) -> f64 {
        self.samples[(k + self.half_width as isize) as usize]
    }

    pub fn peak(&self) -> f64 {
        self.samples[self.half_width]
    }
}

fn gaussian(width: f64, t: f64) -> f64 {
    2f64.powf(0.25) / width.sqrt() * (-PI * t * t / (width * width)).exp()
}

/// Gaussian window truncated at the first integer `L` with `g(L)/g(0) <= eps_trunc`.
pub fn gaussian_window(width: f64, eps_trunc: f64) -> Result<GaussianWindow> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(invalid(format!(
            "window width must be positive, got {width}"
        )));
    }
    if !(eps_trunc > 0.0 && eps_trunc < 1.0) {
        return Err(invalid(format!(
            "truncation level must lie in (0, 1), got {eps_trunc}"
        )));
    }
    let ratio = |l: usize| (-PI * (l * l) as f64 / (width * width)).exp();
    // Relative slack so that the exact 3T case is not pushed one sample out
    // by rounding in exp/ln.
    let below = |l: usize| ratio(l) <= eps_trunc * (1.0 + 1e-9);
    let guess = (width * (-eps_trunc.ln() / PI).sqrt()).ceil() as usize;
    let mut half_width = guess.max(1);
    while half_width > 1 && below(half_width - 1) {
        half_width -= 1;
    }
    while !below(half_width) {
        half_width += 1;
    }
    let samples = (-(half_width as isize)..=half_width as isize)
        .map(|k| gaussian(width, k as f64))
        .collect();
    Ok(GaussianWindow {
        width,
        half_width,
        samples,
    })
}

/// Parameters shared by every STFT of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    /// Window width `T` in samples.
    pub window_width: f64,
    /// Number of frequency bins `N`; `None` picks [`default_n_fft`].
    pub n_fft: Option<usize>,
    pub eps_trunc: f64,
    /// Border band excluded from the zero search; `None` picks [`Margin::default_for`].
    pub margin: Option<Margin>,
}

impl StftConfig {
    pub fn new(window_width: f64) -> Self {
        Self {
            window_width,
            n_fft: None,
            eps_trunc: DEFAULT_EPS_TRUNC,
            margin: None,
        }
    }

    pub fn with_n_fft(mut self, n_fft: usize) -> Self {
        self.n_fft = Some(n_fft);
        self
    }

    pub fn with_margin(mut self, margin: Margin) -> Self {
        self.margin = Some(margin);
        self
    }

    pub fn window(&self) -> Result<GaussianWindow> {
        gaussian_window(self.window_width, self.eps_trunc)
    }

    pub fn resolved_n_fft(&self, window: &GaussianWindow) -> usize {
        self.n_fft
            .unwrap_or_else(|| default_n_fft(window.width(), window.half_width()))
    }

    pub fn resolved_margin(&self, n_fft: usize) -> Margin {
        self.margin
            .unwrap_or_else(|| Margin::default_for(self.window_width, n_fft))
    }

    /// Builds a reusable transform plan.
    pub fn plan(&self) -> Result<StftPlan> {
        let window = self.window()?;
        let n_fft = self.resolved_n_fft(&window);
        StftPlan::new(window, n_fft)
    }
}

/// `max(round(T²), 2L + 1)`. With `N = T²` one frequency bin spans the same
/// distance as one time sample once time is divided by `T` and frequency
/// multiplied by `T`, so grid distances are isotropic.
pub fn default_n_fft(width: f64, half_width: usize) -> usize {
    ((width * width).round() as usize).max(2 * half_width + 1)
}

/// Width of the border bands where zeros are not searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Margin {
    /// Time samples excluded at each end.
    pub time: usize,
    /// Frequency bins excluded next to `0` and `fs/2`.
    pub freq: usize,
}

impl Margin {
    /// Every cell with a full 3×3 neighbourhood.
    pub const FULL_GRID: Margin = Margin { time: 1, freq: 1 };

    pub fn new(time: usize, freq: usize) -> Self {
        Self {
            time: time.max(1),
            freq: freq.max(1),
        }
    }

    /// One window width in time; two bins in frequency.
    ///
    /// Frames closer than `T` to an end see a visibly truncated window
    /// (`g(T)/g(0) = e^{-π}`), which displaces the zeros there.
    pub fn default_for(width: f64, _n_fft: usize) -> Self {
        Self::new(width.ceil() as usize, 2)
    }
}

/// Pre-planned FFTs and window for repeated transforms of equal-length signals.
#[derive(Clone)]
pub struct StftPlan {
    window: GaussianWindow,
    n_fft: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("window_width", &self.window.width)
            .field("half_width", &self.window.half_width)
            .field("n_fft", &self.n_fft)
            .finish()
    }
}

impl StftPlan {
    pub fn new(window: GaussianWindow, n_fft: usize) -> Result<Self> {
        let support = 2 * window.half_width() + 1;
        if n_fft < support {
            return Err(invalid(format!(
                "n_fft = {n_fft} cannot hold the window support of {support} samples"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(n_fft),
            inverse: planner.plan_fft_inverse(n_fft),
            window,
            n_fft,
        })
    }

    pub fn window(&self) -> &GaussianWindow {
        &self.window
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn n_freq(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Adds frame `n` of `x` into `buf` as the real or imaginary part.
    fn load_frame(&self, x: &[f64], n: usize, buf: &mut [Complex64], imaginary: bool) {
        let l = self.window.half_width as isize;
        let lo = (n as isize - l).max(0) as usize;
        let hi = (n + self.window.half_width).min(x.len() - 1);
        for m in lo..=hi {
            let v = x[m] * self.window.at(m as isize - n as isize);
            let slot = &mut buf[m % self.n_fft];
            if imaginary {
                slot.im = v;
            } else {
                slot.re = v;
            }
        }
    }

    /// Runs `sink(n, spectrum_of_frame_n)` for every frame, two real frames
    /// per complex FFT.
    fn for_each_frame(
        &self,
        x: &[f64],
        mut sink: impl FnMut(usize, &mut dyn Iterator<Item = Complex64>),
    ) {
        let nfft = self.n_fft;
        let n_freq = self.n_freq();
        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        let mut n = 0;
        while n < x.len() {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            let pair = n + 1 < x.len();
            self.load_frame(x, n, &mut buf, false);
            if pair {
                self.load_frame(x, n + 1, &mut buf, true);
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            if pair {
                let first = (0..n_freq).map(|q| {
                    let a = buf[q];
                    let b = buf[(nfft - q) % nfft].conj();
                    (a + b) * 0.5
                });
                sink(n, &mut first.into_iter());
                let second = (0..n_freq).map(|q| {
                    let a = buf[q];
                    let b = buf[(nfft - q) % nfft].conj();
                    (a - b) * Complex64::new(0.0, -0.5)
                });
                sink(n + 1, &mut second.into_iter());
                n += 2;
            } else {
                sink(n, &mut buf[..n_freq].iter().copied());
                n += 1;
            }
        }
    }

    pub fn stft(&self, x: &Signal) -> Stft {
        let mut values = Grid::filled(self.n_freq(), x.len(), Complex64::new(0.0, 0.0));
        let n_freq = self.n_freq();
        self.for_each_frame(x.samples(), |n, col| {
            for (q, v) in col.enumerate() {
                values.data[n * n_freq + q] = v;
            }
        });
        Stft {
            values,
            n_fft: self.n_fft,
            window: self.window.clone(),
            fs: x.fs(),
        }
    }

    /// `|V|²` without keeping the complex transform.
    pub fn spectrogram(&self, x: &Signal) -> SpectrogramGrid {
        let mut values = Grid::filled(self.n_freq(), x.len(), 0.0);
        self.spectrogram_into(x.samples(), &mut values);
        SpectrogramGrid {
            values,
            n_fft: self.n_fft,
            window_width: self.window.width,
            fs: x.fs(),
        }
    }

    /// Writes `|V|²` of `x` into `out`, reusing its allocation.
    pub(crate) fn spectrogram_into(&self, x: &[f64], out: &mut Grid<f64>) {
        let n_freq = self.n_freq();
        if out.shape() != (n_freq, x.len()) {
            *out = Grid::filled(n_freq, x.len(), 0.0);
        }
        self.for_each_frame(x, |n, col| {
            for (q, v) in col.enumerate() {
                out.data[n * n_freq + q] = v.norm_sqr();
            }
        });
    }

    fn reconstruct(&self, v: &Stft, mask: &Mask) -> Result<Signal> {
        if mask.shape() != v.values.shape() {
            return Err(invalid(format!(
                "mask shape {:?} differs from STFT shape {:?}",
                mask.shape(),
                v.values.shape()
            )));
        }
        let nfft = self.n_fft;
        let (n_freq, n_time) = v.values.shape();
        let l = self.window.half_width;
        let mut num = vec![0.0; n_time];
        let mut den = vec![0.0; n_time];
        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];

        // Full Hermitian spectrum of frame n, multiplied by `unit` (1 or i)
        // and accumulated into buf.
        let load = |buf: &mut [Complex64], n: usize, unit: Complex64| {
            for q in 0..n_freq {
                if !*mask.get(q, n) {
                    continue;
                }
                let c = *v.values.get(q, n);
                buf[q] += c * unit;
                let mirror = (nfft - q) % nfft;
                if mirror != q {
                    buf[mirror] += c.conj() * unit;
                }
            }
        };
        let mut accumulate = |frame: &dyn Fn(usize) -> f64, n: usize| {
            let lo = n.saturating_sub(l);
            let hi = (n + l).min(n_time - 1);
            for m in lo..=hi {
                let g = self.window.at(m as isize - n as isize);
                num[m] += g * frame(m % nfft);
                den[m] += g * g;
            }
        };

        let scale = 1.0 / nfft as f64;
        let mut n = 0;
        while n < n_time {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            let pair = n + 1 < n_time;
            load(&mut buf, n, Complex64::new(1.0, 0.0));
            if pair {
                load(&mut buf, n + 1, Complex64::new(0.0, 1.0));
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            accumulate(&|i| buf[i].re * scale, n);
            if pair {
                accumulate(&|i| buf[i].im * scale, n + 1);
                n += 2;
            } else {
                n += 1;
            }
        }
        let samples = num
            .iter()
            .zip(&den)
            .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
            .collect();
        Signal::new(samples, v.fs)
    }
}

/// Complex STFT on the one-sided grid `q = 0..=N/2`, one frame per sample.
#[derive(Debug, Clone)]
pub struct Stft {
    pub values: Grid<Complex64>,
    pub n_fft: usize,
    pub window: GaussianWindow,
    pub fs: f64,
}

impl Stft {
    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn scaled(&self, c: f64) -> Stft {
        Stft {
            values: self.values.map(|v| v * c),
            ..self.clone()
        }
    }
}

/// Nonnegative `|V[n, q]|²` with the grid metadata of its STFT.
#[derive(Debug, Clone)]
pub struct SpectrogramGrid {
    pub values: Grid<f64>,
    pub n_fft: usize,
    pub window_width: f64,
    pub fs: f64,
}

impl SpectrogramGrid {
    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Frequency (in units of `fs`) of bin `q`.
    pub fn bin_frequency(&self, q: usize) -> f64 {
        q as f64 * self.fs / self.n_fft as f64
    }
}

/// STFT of `x` with a Gaussian window and `n_fft` frequency bins.
pub fn stft(x: &Signal, window: &GaussianWindow, n_fft: usize) -> Result<Stft> {
    Ok(StftPlan::new(window.clone(), n_fft)?.stft(x))
}

pub fn spectrogram(v: &Stft) -> SpectrogramGrid {
    SpectrogramGrid {
        values: v.values.map(|c| c.norm_sqr()),
        n_fft: v.n_fft,
        window_width: v.window.width,
        fs: v.fs,
    }
}

/// Grid position of a zero: time sample `n`, frequency bin `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZeroCoord {
    pub n: usize,
    pub q: usize,
}

/// Strict 3×3 local minima of a spectrogram, in time-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub coords: Vec<ZeroCoord>,
    pub margin: Margin,
    /// `(n_freq, n_time)` of the searched grid.
    pub shape: (usize, usize),
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Whether `z` sits on the outermost ring of the searched region.
    pub fn on_margin_boundary(&self, z: ZeroCoord) -> bool {
        let (n_freq, n_time) = self.shape;
        z.n <= self.margin.time
            || z.n + 1 + self.margin.time >= n_time
            || z.q <= self.margin.freq
            || z.q + 1 + self.margin.freq >= n_freq
    }
}

/// All strict minima over the 8-neighbourhood, at distance at least `margin`
/// from every border. Plateaus (ties with any neighbour) are not zeros.
pub fn find_zeros(s: &SpectrogramGrid, margin: Margin) -> ZeroSet {
    find_grid_minima(&s.values, margin)
}

pub(crate) fn find_grid_minima(values: &Grid<f64>, margin: Margin) -> ZeroSet {
    let margin = Margin::new(margin.time, margin.freq);
    let (n_freq, n_time) = values.shape();
    let mut coords = Vec::new();
    let v = values.data();
    if n_time > 2 * margin.time && n_freq > 2 * margin.freq {
        for n in margin.time..n_time - margin.time {
            let base = n * n_freq;
            'cell: for q in margin.freq..n_freq - margin.freq {
                let c = v[base + q];
                for dn in [base - n_freq, base, base + n_freq] {
                    for idx in [dn + q - 1, dn + q, dn + q + 1] {
                        if idx != base + q && v[idx] <= c {
                            continue 'cell;
                        }
                    }
                }
                coords.push(ZeroCoord { n, q });
            }
        }
    }
    ZeroSet {
        coords,
        margin,
        shape: (n_freq, n_time),
    }
}

/// Cells where the reference spectrogram reaches `gamma_sq`: the interior of
/// the level curve `S = γ²`.
pub fn level_curve_mask(s_ref: &SpectrogramGrid, gamma_sq: f64) -> Result<Mask> {
    if !(gamma_sq > 0.0) {
        return Err(invalid(format!("level must be positive, got {gamma_sq}")));
    }
    Ok(s_ref.values.map(|&v| v >= gamma_sq))
}

/// Inverts a masked STFT. Each unmasked column is mirrored to the full
/// Hermitian spectrum, inverse transformed, and the frames are overlap-added
/// with window weights and normalized by `Σ g²`.
pub fn reconstruct(v: &Stft, mask: &Mask) -> Result<Signal> {
    StftPlan::new(v.window.clone(), v.n_fft)?.reconstruct(v, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn window_peak_and_symmetry() {
        let w = gaussian_window(16.0, DEFAULT_EPS_TRUNC).unwrap();
        assert_abs_diff_eq!(w.peak(), 2f64.powf(0.25) / 4.0, epsilon = 1e-15);
        let l = w.half_width() as isize;
        for k in 0..=l {
            assert_eq!(w.at(k), w.at(-k));
        }
    }

    #[test]
    fn three_sigma_truncation() {
        for width in [4.0, 8.0, 16.0, 32.0, 10.5] {
            let w = gaussian_window(width, (-9.0 * PI).exp()).unwrap();
            assert_eq!(w.half_width(), (3.0 * width).ceil() as usize, "T = {width}");
        }
        let w = gaussian_window(32.0, DEFAULT_EPS_TRUNC).unwrap();
        assert_eq!(w.half_width(), 96);
    }

    #[test]
    fn window_is_unit_energy() {
        for width in [8.0, 12.0, 32.0] {
            let w = gaussian_window(width, DEFAULT_EPS_TRUNC).unwrap();
            let e: f64 = w.samples().iter().map(|g| g * g).sum();
            assert!((e - 1.0).abs() < 0.01, "T = {width}: energy {e}");
        }
    }

    #[test]
    fn window_rejects_bad_parameters() {
        assert!(gaussian_window(0.0, 0.1).is_err());
        assert!(gaussian_window(8.0, 1.0).is_err());
        assert!(gaussian_window(8.0, 0.0).is_err());
    }

    #[test]
    fn n_fft_must_hold_window() {
        let w = gaussian_window(8.0, DEFAULT_EPS_TRUNC).unwrap();
        let x = Signal::from_samples(vec![1.0; 16]).unwrap();
        assert!(stft(&x, &w, 2 * w.half_width()).is_err());
        assert!(stft(&x, &w, 2 * w.half_width() + 1).is_ok());
    }

    #[test]
    fn impulse_response_is_the_window() {
        let w = gaussian_window(8.0, DEFAULT_EPS_TRUNC).unwrap();
        let len = 64;
        let n0 = 30;
        let mut samples = vec![0.0; len];
        samples[n0] = 1.0;
        let x = Signal::from_samples(samples).unwrap();
        let v = stft(&x, &w, 64).unwrap();
        let l = w.half_width() as isize;
        for n in 0..len {
            let k = n0 as isize - n as isize;
            let expect = if k.abs() <= l { w.at(k) } else { 0.0 };
            for q in 0..v.values.n_freq() {
                assert_abs_diff_eq!(v.values.get(q, n).norm(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_signal_has_zero_transform() {
        let w = gaussian_window(8.0, DEFAULT_EPS_TRUNC).unwrap();
        let x = Signal::zeros(33, 1.0).unwrap();
        let v = stft(&x, &w, 64).unwrap();
        assert!(v.values.iter().all(|c| c.norm() == 0.0));
        assert!(spectrogram(&v).values.iter().all(|&s| s == 0.0));
        assert_eq!(v.shape(), (33, 33));
    }

    #[test]
    fn paired_and_single_frames_agree() {
        // Odd length exercises the unpaired last frame.
        let w = gaussian_window(6.0, DEFAULT_EPS_TRUNC).unwrap();
        let samples: Vec<f64> = (0..41).map(|m| ((m * m) as f64 * 0.37).sin()).collect();
        let x = Signal::from_samples(samples.clone()).unwrap();
        let v = stft(&x, &w, 48).unwrap();
        let l = w.half_width() as isize;
        for n in [0usize, 17, 40] {
            for q in [0usize, 5, 24] {
                let mut direct = Complex64::new(0.0, 0.0);
                for m in (n as isize - l).max(0)..=(n as isize + l).min(40) {
                    let phase = -2.0 * PI * (q as f64) * (m as f64) / 48.0;
                    direct += samples[m as usize]
                        * w.at(m - n as isize)
                        * Complex64::new(phase.cos(), phase.sin());
                }
                assert_abs_diff_eq!(v.values.get(q, n).re, direct.re, epsilon = 1e-11);
                assert_abs_diff_eq!(v.values.get(q, n).im, direct.im, epsilon = 1e-11);
            }
        }
    }

    fn grid(rows: &[&[f64]]) -> SpectrogramGrid {
        let n_freq = rows.len();
        let n_time = rows[0].len();
        SpectrogramGrid {
            values: Grid::from_fn(n_freq, n_time, |q, n| rows[q][n]),
            n_fft: 2 * (n_freq - 1),
            window_width: 1.0,
            fs: 1.0,
        }
    }

    #[test]
    fn strict_minimum_found_and_plateau_rejected() {
        let s = grid(&[
            &[5.0, 5.0, 5.0, 5.0, 5.0],
            &[5.0, 1.0, 5.0, 2.0, 5.0],
            &[5.0, 5.0, 5.0, 2.0, 5.0],
            &[5.0, 5.0, 5.0, 5.0, 5.0],
        ]);
        let z = find_zeros(&s, Margin::new(1, 1));
        assert_eq!(z.coords, vec![ZeroCoord { n: 1, q: 1 }]);
    }

    #[test]
    fn constant_spectrogram_has_no_zeros() {
        let row: &[f64] = &[3.0; 6];
        let s = grid(&[row; 6]);
        assert!(find_zeros(&s, Margin::new(1, 1)).is_empty());
    }

    #[test]
    fn margin_excludes_border_minima() {
        let s = grid(&[
            &[5.0, 5.0, 5.0, 5.0, 5.0, 5.0],
            &[5.0, 1.0, 5.0, 5.0, 5.0, 5.0],
            &[5.0, 5.0, 5.0, 5.0, 5.0, 5.0],
            &[5.0, 5.0, 5.0, 0.5, 5.0, 5.0],
            &[5.0, 5.0, 5.0, 5.0, 5.0, 5.0],
            &[5.0, 5.0, 5.0, 5.0, 5.0, 5.0],
        ]);
        assert_eq!(find_zeros(&s, Margin::new(1, 1)).len(), 2);
        let z = find_zeros(&s, Margin::new(2, 2));
        assert_eq!(z.coords, vec![ZeroCoord { n: 3, q: 3 }]);
    }

    #[test]
    fn level_curve_limits() {
        let s = grid(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(level_curve_mask(&s, 7.0).unwrap().count_true(), 0);
        assert_eq!(level_curve_mask(&s, 1e-300).unwrap().count_true(), 6);
        assert_eq!(level_curve_mask(&s, 4.0).unwrap().count_true(), 3);
        assert!(level_curve_mask(&s, 0.0).is_err());
    }

    #[test]
    fn all_false_mask_gives_silence() {
        let plan = StftConfig::new(8.0).plan().unwrap();
        let x = Signal::from_samples((0..50).map(|m| (m as f64).cos()).collect()).unwrap();
        let v = plan.stft(&x);
        let (f, t) = v.shape();
        let y = reconstruct(&v, &Grid::filled(f, t, false)).unwrap();
        assert!(y.samples().iter().all(|&s| s == 0.0));
        assert!(reconstruct(&v, &Grid::filled(f, t + 1, true)).is_err());
    }
}
