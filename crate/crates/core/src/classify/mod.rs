//! Classification of the original spectrogram zeros from the local density
//! and concentration of the noise-assisted histogram.
//!
//! For each original zero `z` the histogram values in the open ball
//! `{[n, q] : |[n, q] - z| < r}` give a density (their sum) and a
//! concentration (the Shannon entropy, in bits, of the normalized values).
//! Both features are z-scored, clustered by cityblock k-means for
//! `K = 1, 2, 3`, and `K` is picked by the gap statistic. Clusters are then
//! named from their centroids:
//!
//! * `K = 1`: every zero is noise-noise ([`ZeroKind::Second`]).
//! * lowest centroid density: [`ZeroKind::Second`].
//! * with `K = 3`, the lower-entropy of the two remaining clusters:
//!   [`ZeroKind::First`].
//! * the remaining cluster: [`ZeroKind::Third`].

pub mod gap;
pub mod ground_truth;
pub mod kmeans;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signals::Signal;
use crate::tf::{find_zeros, Grid, SpectrogramGrid, StftConfig, ZeroCoord, ZeroSet};
use crate::zero_hist::{estimate_noise_std, histogram_snapshots_with, Histogram2D};

pub use gap::{gap_select_k, GapSelection, GapValue};
pub use kmeans::{kmeans_cityblock, ClusterModel, KMeansOptions, Point};

/// Origin of a spectrogram zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroKind {
    /// Interference between signal components.
    First,
    /// Interference between noise components.
    Second,
    /// Interference between signal and noise, near the signal-domain border.
    Third,
}

impl ZeroKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ZeroKind::First => "first",
            ZeroKind::Second => "second",
            ZeroKind::Third => "third",
        }
    }
}

/// Integer offsets `(dn, dq)` with `dn² + dq² < r²`.
pub fn ball_offsets(r: f64) -> Vec<(isize, isize)> {
    let reach = r.ceil() as isize;
    let r2 = r * r;
    let mut out = Vec::new();
    for dn in -reach..=reach {
        for dq in -reach..=reach {
            if ((dn * dn + dq * dq) as f64) < r2 {
                out.push((dn, dq));
            }
        }
    }
    out
}

/// Histogram values in the ball of radius `r` around `z`, clipped to the grid.
pub fn ball_values(g: &Histogram2D, z: ZeroCoord, r: f64) -> Vec<u32> {
    ball_values_with(&g.counts, z, &ball_offsets(r))
}

fn ball_values_with(counts: &Grid<u32>, z: ZeroCoord, offsets: &[(isize, isize)]) -> Vec<u32> {
    let (n_freq, n_time) = counts.shape();
    offsets
        .iter()
        .filter_map(|&(dn, dq)| {
            let n = z.n as isize + dn;
            let q = z.q as isize + dq;
            (n >= 0 && q >= 0 && (n as usize) < n_time && (q as usize) < n_freq)
                .then(|| *counts.get(q as usize, n as usize))
        })
        .collect()
}

/// Shannon entropy in bits of `values / Σ values`; `None` for an empty ball.
pub fn shannon_entropy(values: &[u32]) -> Option<f64> {
    let total: u64 = values.iter().map(|&v| v as u64).sum();
    if total == 0 {
        return None;
    }
    let total = total as f64;
    Some(
        values
            .iter()
            .filter(|&&v| v > 0)
            .map(|&v| {
                let p = v as f64 / total;
                -p * p.log2()
            })
            .sum(),
    )
}

/// Per-zero histogram descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroFeatures {
    pub radius: f64,
    /// `‖B(z, r)‖₁` for every original zero.
    pub density: Vec<f64>,
    /// Entropy in bits; `None` where the ball is empty.
    pub entropy: Vec<Option<f64>>,
    /// Number of grid cells inside each (clipped) ball.
    pub ball_size: Vec<usize>,
    /// Indices of the zeros with a non-empty ball, in order.
    pub clustered: Vec<usize>,
    /// z-scored `(density, entropy)` of the `clustered` zeros.
    pub normalized: Vec<Point>,
}

impl ZeroFeatures {
    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }
}

fn zscore(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    values
        .iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect()
}

/// Density and entropy of the histogram ball around each zero of `z0`.
///
/// Zeros whose ball is empty have no entropy; they are left out of the
/// normalized feature set. If every ball is empty the histogram carries no
/// information and [`Error::DegenerateHistogram`] is returned.
pub fn features(g: &Histogram2D, z0: &ZeroSet, r: f64) -> Result<ZeroFeatures> {
    if z0.is_empty() {
        return Err(invalid("no original zeros to describe"));
    }
    if !(r > 0.0) {
        return Err(invalid(format!("ball radius must be positive, got {r}")));
    }
    let offsets = ball_offsets(r);
    let mut density = Vec::with_capacity(z0.len());
    let mut entropy = Vec::with_capacity(z0.len());
    let mut ball_size = Vec::with_capacity(z0.len());
    for &z in &z0.coords {
        let ball = ball_values_with(&g.counts, z, &offsets);
        density.push(ball.iter().map(|&v| v as f64).sum());
        entropy.push(shannon_entropy(&ball));
        ball_size.push(ball.len());
    }
    let clustered: Vec<usize> = (0..z0.len()).filter(|&i| entropy[i].is_some()).collect();
    if clustered.is_empty() {
        return Err(Error::DegenerateHistogram);
    }
    let d: Vec<f64> = clustered.iter().map(|&i| density[i]).collect();
    let h: Vec<f64> = clustered.iter().map(|&i| entropy[i].unwrap()).collect();
    let normalized = zscore(&d)
        .into_iter()
        .zip(zscore(&h))
        .map(|(a, b)| [a, b])
        .collect();
    Ok(ZeroFeatures {
        radius: r,
        density,
        entropy,
        ball_size,
        clustered,
        normalized,
    })
}

/// Cluster-to-kind mapping plus whether a centroid tie had to be broken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabels {
    /// Kind of each cluster, indexed by cluster.
    pub cluster_kinds: Vec<ZeroKind>,
    pub tie_broken: bool,
}

/// Names the clusters of `model` from their centroids `[density, entropy]`.
/// Ties go to the lower cluster index.
pub fn label_clusters(model: &ClusterModel) -> ClusterLabels {
    let k = model.k;
    let mut kinds = vec![ZeroKind::Third; k];
    if k == 1 {
        return ClusterLabels {
            cluster_kinds: vec![ZeroKind::Second],
            tie_broken: false,
        };
    }
    let mut tie_broken = false;
    let argmin = |candidates: &[usize], dim: usize, tie: &mut bool| {
        let mut best = candidates[0];
        for &c in &candidates[1..] {
            let v = model.centroids[c][dim];
            let b = model.centroids[best][dim];
            if v < b {
                best = c;
            } else if v == b {
                *tie = true;
            }
        }
        best
    };
    let all: Vec<usize> = (0..k).collect();
    let second = argmin(&all, 0, &mut tie_broken);
    kinds[second] = ZeroKind::Second;
    if k == 3 {
        let rest: Vec<usize> = all.iter().copied().filter(|&c| c != second).collect();
        let first = argmin(&rest, 1, &mut tie_broken);
        kinds[first] = ZeroKind::First;
    }
    ClusterLabels {
        cluster_kinds: kinds,
        tie_broken,
    }
}

/// Parameters of the full classification pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub stft: StftConfig,
    /// Ball radius in grid cells; `None` means `3T/8`.
    pub radius: Option<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Variance of the added noise; `None` uses the MAD estimate squared.
    pub gamma_noise_sq: Option<f64>,
    pub reference_sets: usize,
    pub k_max: usize,
    pub kmeans: KMeansOptions,
}

impl ClassifierConfig {
    pub fn new(window_width: f64) -> Self {
        Self {
            stft: StftConfig::new(window_width),
            radius: None,
            realizations: 512,
            seed: 0,
            gamma_noise_sq: None,
            reference_sets: 10,
            k_max: 3,
            kmeans: KMeansOptions::default(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or(3.0 * self.stft.window_width / 8.0)
    }
}

/// Everything produced by [`classify_zeros`].
#[derive(Debug, Clone)]
pub struct Classification {
    pub zeros: ZeroSet,
    pub labels: Vec<ZeroKind>,
    pub features: ZeroFeatures,
    /// Partition for the selected `K`, over `features.clustered`.
    pub model: ClusterModel,
    pub gap: GapSelection,
    pub cluster_labels: ClusterLabels,
    pub histogram: Histogram2D,
    pub spectrogram: SpectrogramGrid,
    /// MAD estimate of the noise standard deviation.
    pub noise_std: f64,
}

impl Classification {
    pub fn k(&self) -> usize {
        self.model.k
    }

    pub fn count(&self, kind: ZeroKind) -> usize {
        self.labels.iter().filter(|&&l| l == kind).count()
    }

    /// Zeros whose histogram ball was empty; they are labelled second kind.
    pub fn empty_ball(&self) -> Vec<bool> {
        self.features.entropy.iter().map(Option::is_none).collect()
    }
}

/// Labels from a histogram already computed for the zeros `z0`.
pub fn classify_with_histogram(
    z0: &ZeroSet,
    histogram: &Histogram2D,
    radius: f64,
    cfg: &ClassifierConfig,
) -> Result<(Vec<ZeroKind>, ZeroFeatures, GapSelection, ClusterLabels)> {
    let feats = features(histogram, z0, radius)?;
    let selection = gap_select_k(
        &feats.normalized,
        cfg.k_max,
        cfg.reference_sets,
        cfg.seed,
        cfg.kmeans,
    )?;
    let model = &selection.models[selection.k - 1];
    let names = label_clusters(model);
    let mut labels = vec![ZeroKind::Second; z0.len()];
    for (slot, &zi) in feats.clustered.iter().enumerate() {
        labels[zi] = names.cluster_kinds[model.assignment[slot]];
    }
    Ok((labels, feats, selection, names))
}

/// The full pipeline: zeros of `y`, MAD noise estimate, noise-assisted
/// histogram, features, clustering with gap selection, and labels.
pub fn classify_zeros(y: &Signal, cfg: &ClassifierConfig) -> Result<Classification> {
    if cfg.realizations < 1 {
        return Err(invalid("number of realizations must be at least 1"));
    }
    let plan = cfg.stft.plan()?;
    let margin = cfg.stft.resolved_margin(plan.n_fft());
    let v = plan.stft(y);
    let noise_std = estimate_noise_std(&v);
    let spectrogram = crate::tf::spectrogram(&v);
    let zeros = find_zeros(&spectrogram, margin);
    let gamma_sq = cfg.gamma_noise_sq.unwrap_or(noise_std * noise_std);
    let histogram =
        histogram_snapshots_with(y, &plan, &[cfg.realizations], gamma_sq, cfg.seed)?.remove(0);
    let (labels, features, gap, cluster_labels) =
        classify_with_histogram(&zeros, &histogram, cfg.radius(), cfg)?;
    let model = gap.models[gap.k - 1].clone();
    Ok(Classification {
        zeros,
        labels,
        features,
        model,
        gap,
        cluster_labels,
        histogram,
        spectrogram,
        noise_std,
    })
}
