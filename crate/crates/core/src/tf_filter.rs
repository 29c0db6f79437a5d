//! Denoising by Delaunay triangulation of the spectrogram zeros.
//!
//! The zeros are triangulated in normalized coordinates (time divided by
//! the window width `T`, frequency in cycles per sample times `T`), so that
//! noise zeros are about one unit apart whatever `T` is. Triangles covering
//! the signal domain are then selected, either because they are unusually
//! large ([`select_by_edge_length`]) or from the kinds of their vertices
//! ([`select_by_labels`]), rasterized into a mask and inverted.

use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::classify::{classify_zeros, ClassifierConfig, ZeroKind};
use crate::error::{invalid, Result};
use crate::signals::{white_gaussian_noise, NoiseSpec, Signal};
use crate::tf::{find_zeros, reconstruct, Grid, Mask, ZeroCoord, ZeroSet};
use crate::zero_hist::estimate_noise_std;

/// Longest edge of the triangles formed by the deterministic zeros between
/// two equal-amplitude tones `θ/√(2π)` apart (window width 1):
/// `√(((2π)² + θ⁴) / (2π θ²))`.
pub fn longest_edge_bound(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(invalid(format!("theta must be positive, got {theta}")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(((two_pi * two_pi + theta.powi(4)) / (two_pi * theta * theta)).sqrt())
}

/// Delaunay triangles over a zero set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleSet {
    /// Grid positions of the vertices.
    pub vertices: Vec<ZeroCoord>,
    /// Vertices as `(n / T, q T / N)`.
    pub points: Vec<[f64; 2]>,
    /// Counter-clockwise vertex index triples.
    pub triangles: Vec<[usize; 3]>,
    /// Edge lengths of each triangle in normalized units, ascending.
    pub edge_lengths: Vec<[f64; 3]>,
    /// Set when the input could not be triangulated.
    pub warning: Option<String>,
}

impl TriangleSet {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn longest_edge(&self, t: usize) -> f64 {
        self.edge_lengths[t][2]
    }

    /// Same vertices, only the triangles for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(usize) -> bool) -> TriangleSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&t| keep(t)).collect();
        TriangleSet {
            vertices: self.vertices.clone(),
            points: self.points.clone(),
            triangles: idx.iter().map(|&t| self.triangles[t]).collect(),
            edge_lengths: idx.iter().map(|&t| self.edge_lengths[t]).collect(),
            warning: self.warning.clone(),
        }
    }
}

struct Vertex {
    position: Point2<f64>,
    index: usize,
}

impl HasPosition for Vertex {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Delaunay triangulation of `zeros` after normalizing time by
/// `window_width` and frequency (`q / n_fft`) by `1 / window_width`.
///
/// Fewer than three zeros, or zeros on a single line, give an empty set
/// with [`TriangleSet::warning`] filled in.
pub fn delaunay(zeros: &ZeroSet, window_width: f64, n_fft: usize) -> Result<TriangleSet> {
    if !(window_width > 0.0) || n_fft == 0 {
        return Err(invalid("window width and n_fft must be positive"));
    }
    let points: Vec<[f64; 2]> = zeros
        .coords
        .iter()
        .map(|z| {
            [
                z.n as f64 / window_width,
                z.q as f64 * window_width / n_fft as f64,
            ]
        })
        .collect();
    let empty = |msg: &str| TriangleSet {
        vertices: zeros.coords.clone(),
        points: points.clone(),
        triangles: Vec::new(),
        edge_lengths: Vec::new(),
        warning: Some(msg.to_string()),
    };
    if points.len() < 3 {
        return Ok(empty("fewer than three zeros, nothing to triangulate"));
    }
    let mut dt: DelaunayTriangulation<Vertex> = DelaunayTriangulation::new();
    for (index, p) in points.iter().enumerate() {
        dt.insert(Vertex {
            position: Point2::new(p[0], p[1]),
            index,
        })
        .map_err(|e| invalid(format!("cannot triangulate zero {index}: {e:?}")))?;
    }
    let mut triangles: Vec<[usize; 3]> = dt
        .inner_faces()
        .map(|f| {
            let [a, b, c] = f.vertices();
            [a.data().index, b.data().index, c.data().index]
        })
        .collect();
    if triangles.is_empty() {
        return Ok(empty("all zeros are collinear, nothing to triangulate"));
    }
    // Rotate each triple to start at its smallest index, then sort, so the
    // output does not depend on the internal face order.
    for t in &mut triangles {
        let m = (0..3).min_by_key(|&i| t[i]).unwrap();
        t.rotate_left(m);
    }
    triangles.sort_unstable();
    let edge_lengths = triangles
        .iter()
        .map(|t| {
            let mut e = [
                dist(points[t[0]], points[t[1]]),
                dist(points[t[1]], points[t[2]]),
                dist(points[t[2]], points[t[0]]),
            ];
            e.sort_by(f64::total_cmp);
            e
        })
        .collect();
    Ok(TriangleSet {
        vertices: zeros.coords.clone(),
        points,
        triangles,
        edge_lengths,
        warning: None,
    })
}

/// Triangles whose longest edge exceeds `l_max`.
pub fn select_by_edge_length(ts: &TriangleSet, l_max: f64) -> Result<TriangleSet> {
    if !(l_max >= 0.0) {
        return Err(invalid(format!("l_max must be non-negative, got {l_max}")));
    }
    Ok(ts.filter(|t| ts.longest_edge(t) > l_max))
}

/// Triangles with at least one first-kind vertex, or with three third-kind
/// vertices. `labels` is indexed like `ts.vertices`.
pub fn select_by_labels(ts: &TriangleSet, labels: &[ZeroKind]) -> Result<TriangleSet> {
    if labels.len() != ts.vertices.len() {
        return Err(invalid(format!(
            "{} labels for {} vertices",
            labels.len(),
            ts.vertices.len()
        )));
    }
    Ok(ts.filter(|t| {
        let kinds = ts.triangles[t].map(|v| labels[v]);
        kinds.contains(&ZeroKind::First) || kinds.iter().all(|&k| k == ZeroKind::Third)
    }))
}

/// Drops the triangles with a vertex on the outer ring of the zero search
/// region; zeros there are displaced by the border of the grid.
pub fn exclude_margin_touching(ts: &TriangleSet, zeros: &ZeroSet) -> TriangleSet {
    ts.filter(|t| {
        ts.triangles[t]
            .iter()
            .all(|&v| !zeros.on_margin_boundary(ts.vertices[v]))
    })
}

fn orient(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> i64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Union of the grid cells whose centre lies inside or on the boundary of a
/// triangle of `ts`. The test is exact: vertices are grid points, and
/// normalization is an axis scaling that does not change inclusion.
pub fn triangles_to_mask(ts: &TriangleSet, shape: (usize, usize)) -> Mask {
    let (n_freq, n_time) = shape;
    let mut mask = Grid::filled(n_freq, n_time, false);
    for tri in &ts.triangles {
        let v = tri.map(|i| (ts.vertices[i].n as i64, ts.vertices[i].q as i64));
        let n_lo = v.iter().map(|p| p.0).min().unwrap().max(0);
        let n_hi = v.iter().map(|p| p.0).max().unwrap().min(n_time as i64 - 1);
        let q_lo = v.iter().map(|p| p.1).min().unwrap().max(0);
        let q_hi = v.iter().map(|p| p.1).max().unwrap().min(n_freq as i64 - 1);
        for n in n_lo..=n_hi {
            for q in q_lo..=q_hi {
                let p = (n, q);
                let d = [
                    orient(v[0], v[1], p),
                    orient(v[1], v[2], p),
                    orient(v[2], v[0], p),
                ];
                let inside = d.iter().all(|&x| x >= 0) || d.iter().all(|&x| x <= 0);
                if inside {
                    mask.set(q as usize, n as usize, true);
                }
            }
        }
    }
    mask
}

/// Grows `mask` by every cell within Euclidean distance `radius` (cells).
pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let (n_freq, n_time) = mask.shape();
    let r = radius as isize;
    let offsets: Vec<(isize, isize)> = (-r..=r)
        .flat_map(|dn| (-r..=r).map(move |dq| (dn, dq)))
        .filter(|(dn, dq)| dn * dn + dq * dq <= r * r)
        .collect();
    let mut out = mask.clone();
    for n in 0..n_time {
        for q in 0..n_freq {
            if !*mask.get(q, n) {
                continue;
            }
            for &(dn, dq) in &offsets {
                let (nn, qq) = (n as isize + dn, q as isize + dq);
                if nn >= 0 && qq >= 0 && (nn as usize) < n_time && (qq as usize) < n_freq {
                    out.set(qq as usize, nn as usize, true);
                }
            }
        }
    }
    out
}

/// Quality of reconstruction `10 log₁₀(‖x‖² / ‖x − x̂‖²)` in dB; `+∞` when
/// the estimate is exact.
pub fn qrf(x: &Signal, x_hat: &Signal) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(invalid(format!(
            "signal lengths differ: {} and {}",
            x.len(),
            x_hat.len()
        )));
    }
    let err: f64 = x
        .samples()
        .iter()
        .zip(x_hat.samples())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (x.energy() / err).log10())
}

/// How the signal domain is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DenoiseMethod {
    /// No filtering: the input is returned unchanged.
    Identity,
    /// Triangles with an edge longer than `l_max` (normalized units).
    EdgeLength { l_max: f64 },
    /// Triangles selected from the classified zeros.
    Classified,
}

/// Options of [`denoise`] beyond the choice of method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    /// STFT grid and margin, plus the classification parameters used by
    /// [`DenoiseMethod::Classified`].
    pub classifier: ClassifierConfig,
    /// Mask dilation radius in cells.
    pub dilation: usize,
    /// Samples of synthetic noise added at each end before the analysis;
    /// `None` means `2⌈T⌉`.
    ///
    /// Zeros are only searched away from the borders, so without padding a
    /// component that reaches the start or the end of the observation has
    /// no triangle covering it there. The padding is white noise at the
    /// MAD-estimated level of the observation, which surrounds the observed
    /// interval with noise zeros; the estimate is cropped back afterwards.
    pub border_pad: Option<usize>,
}

impl DenoiseConfig {
    pub fn new(classifier: ClassifierConfig) -> Self {
        Self {
            classifier,
            dilation: 0,
            border_pad: None,
        }
    }

    pub fn border_pad(&self) -> usize {
        self.border_pad
            .unwrap_or(2 * self.classifier.stft.window_width.ceil() as usize)
    }
}

/// Noise stream of the border padding, apart from the histogram streams.
const PAD_STREAM: u64 = 1 << 33;

#[derive(Debug, Clone)]
pub struct Denoised {
    /// Estimate of the signal, same length as the input.
    pub signal: Signal,
    /// Offset of the input inside the analysed (padded) signal; the mask,
    /// zeros and triangles refer to the padded time axis.
    pub pad: usize,
    pub mask: Mask,
    pub zeros: ZeroSet,
    /// Full triangulation of the zeros.
    pub triangles: TriangleSet,
    /// The triangles that make up the mask.
    pub selected: TriangleSet,
    /// Zero kinds, for the classified method.
    pub labels: Option<Vec<ZeroKind>>,
    pub warning: Option<String>,
}

fn pad_with_noise(y: &Signal, pad: usize, std: f64, seed: u64) -> Result<Signal> {
    if pad == 0 {
        return Ok(y.clone());
    }
    let noise = if std > 0.0 {
        white_gaussian_noise(2 * pad, NoiseSpec::new(std * std, seed, PAD_STREAM))?
    } else {
        Signal::zeros(2 * pad, y.fs())?
    };
    let mut v = noise.samples()[..pad].to_vec();
    v.extend_from_slice(y.samples());
    v.extend_from_slice(&noise.samples()[pad..]);
    Signal::new(v, y.fs())
}

/// Estimates the signal in `y` by masking its STFT with the selected
/// triangles and inverting.
pub fn denoise(y: &Signal, method: DenoiseMethod, cfg: &DenoiseConfig) -> Result<Denoised> {
    let ccfg = &cfg.classifier;
    let plan = ccfg.stft.plan()?;
    let margin = ccfg.stft.resolved_margin(plan.n_fft());
    let width = ccfg.stft.window_width;

    if let DenoiseMethod::EdgeLength { l_max } = method {
        if !(l_max >= 0.0) {
            return Err(invalid(format!("l_max must be non-negative, got {l_max}")));
        }
    }
    let pad = match method {
        DenoiseMethod::Identity => 0,
        _ => cfg.border_pad(),
    };
    let std = estimate_noise_std(&plan.stft(y));
    let padded = pad_with_noise(y, pad, std, ccfg.seed)?;
    let v = plan.stft(&padded);

    let (zeros, labels) = match method {
        DenoiseMethod::Classified => {
            let c = classify_zeros(&padded, ccfg)?;
            (c.zeros, Some(c.labels))
        }
        _ => (find_zeros(&crate::tf::spectrogram(&v), margin), None),
    };
    let triangles = delaunay(&zeros, width, plan.n_fft())?;
    let shape = v.shape();

    if let DenoiseMethod::Identity = method {
        return Ok(Denoised {
            signal: y.clone(),
            pad,
            mask: Grid::filled(shape.0, shape.1, true),
            zeros,
            selected: triangles.clone(),
            triangles,
            labels,
            warning: None,
        });
    }

    let chosen = match (method, &labels) {
        (DenoiseMethod::EdgeLength { l_max }, _) => select_by_edge_length(&triangles, l_max)?,
        (_, Some(l)) => select_by_labels(&triangles, l)?,
        _ => unreachable!("labels exist for the classified method"),
    };
    let selected = exclude_margin_touching(&chosen, &zeros);
    let mask = dilate(&triangles_to_mask(&selected, shape), cfg.dilation);
    let mut warning = triangles.warning.clone();
    let signal = if mask.count_true() == 0 {
        warning.get_or_insert_with(|| "no triangle selected; the estimate is zero".to_string());
        Signal::new(vec![0.0; y.len()], y.fs())?
    } else {
        let full = reconstruct(&v, &mask)?;
        Signal::new(full.samples()[pad..pad + y.len()].to_vec(), y.fs())?
    };
    Ok(Denoised {
        signal,
        pad,
        mask,
        zeros,
        triangles,
        selected,
        labels,
        warning,
    })
}


#[cfg(test)]
mod pipeline_tests {
    use super::*;
    use crate::signals::{triple_tone, white_gaussian_noise, NoiseSpec, ToneTriplet};

    fn cfg(t: f64) -> DenoiseConfig {
        let mut c = ClassifierConfig::new(t);
        c.realizations = 128;
        DenoiseConfig::new(c)
    }

    #[test]
    fn faint_noise_two_tones_survive_edge_selection() {
        // Some noise is needed: without it no zero encloses the tones.
        let n = 256;
        let x = Signal::from_samples(
            (0..n)
                .map(|m| {
                    let t = m as f64;
                    (2.0 * std::f64::consts::PI * 0.15 * t).cos()
                        + (2.0 * std::f64::consts::PI * 0.35 * t).cos()
                })
                .collect(),
        )
        .unwrap();
        let noise = white_gaussian_noise(n, NoiseSpec::new(1.0, 4, 0)).unwrap();
        let y = crate::signals::mix_at_snr(&x, &noise, 40.0)
            .unwrap()
            .mixture;
        let d = denoise(&y, DenoiseMethod::EdgeLength { l_max: 2.0 }, &cfg(16.0)).unwrap();
        assert!(qrf(&x, &d.signal).unwrap() >= 20.0);
    }

    #[test]
    fn identity_returns_the_input() {
        let y = white_gaussian_noise(128, NoiseSpec::new(1.0, 2, 0)).unwrap();
        let d = denoise(&y, DenoiseMethod::Identity, &cfg(8.0)).unwrap();
        assert_eq!(d.signal, y);
    }

    #[test]
    fn classified_denoising_is_deterministic() {
        let spec = ToneTriplet::new(0.25, 3.0, 16.0);
        let x = triple_tone(&spec, 160, 1.0).unwrap();
        let y = x
            .add(&white_gaussian_noise(160, NoiseSpec::new(0.01, 5, 0)).unwrap())
            .unwrap();
        let a = denoise(&y, DenoiseMethod::Classified, &cfg(16.0)).unwrap();
        let b = denoise(&y, DenoiseMethod::Classified, &cfg(16.0)).unwrap();
        assert_eq!(a.signal, b.signal);
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn negative_threshold_is_rejected() {
        let y = white_gaussian_noise(64, NoiseSpec::new(1.0, 2, 0)).unwrap();
        assert!(denoise(&y, DenoiseMethod::EdgeLength { l_max: -1.0 }, &cfg(8.0)).is_err());
    }
}
