//! Gap statistic for choosing the number of clusters.
//!
//! `Gap(K) = mean_b log W*_b(K) - log W(K)`, where
//! `W(K) = Σ_c D_c / (2 n_c)` is the pooled within-cluster dispersion of the
//! best cityblock k-means partition (`D_c` sums the L1 distances over all
//! ordered pairs of cluster `c`, `n_c` is its size) and `W*_b` the same
//! quantity for reference sets drawn uniformly over the bounding box of the
//! data. The selected `K` is the smallest with `Gap(K) >= Gap(K+1) - s(K+1)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_cityblock, l1, ClusterModel, KMeansOptions, Point};
use crate::error::{invalid, Result};
use crate::signals::stream_rng;

/// Stream offset keeping reference draws apart from the k-means restarts.
const REFERENCE_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapValue {
    pub k: usize,
    pub log_w: f64,
    pub gap: f64,
    /// `sd_k · sqrt(1 + 1/B)`.
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSelection {
    pub k: usize,
    pub values: Vec<GapValue>,
    /// Fitted partitions for `K = 1..=values.len()`.
    #[serde(skip)]
    pub models: Vec<ClusterModel>,
}

/// `log Σ_c D_c / (2 n_c)` for the partition `model` of `points`.
pub fn log_dispersion(points: &[Point], model: &ClusterModel) -> f64 {
    let mut members = vec![Vec::new(); model.k];
    for (p, &a) in points.iter().zip(&model.assignment) {
        members[a].push(*p);
    }
    let w: f64 = members
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| {
            let mut pairs = 0.0;
            for (i, a) in m.iter().enumerate() {
                for b in &m[i + 1..] {
                    pairs += l1(a, b);
                }
            }
            // Unordered pairs counted once: D_c / (2 n_c) = pairs / n_c.
            pairs / m.len() as f64
        })
        .sum();
    w.max(f64::MIN_POSITIVE).ln()
}

/// Chooses `K ∈ 1..=k_max` with `B = reference_sets` uniform references.
/// Fewer than three points always yield `K = 1`.
pub fn gap_select_k(
    points: &[Point],
    k_max: usize,
    reference_sets: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<GapSelection> {
    if reference_sets < 1 {
        return Err(invalid("at least one reference set is required"));
    }
    if points.is_empty() {
        return Err(invalid("no points to cluster"));
    }
    let k_max = k_max.max(1).min(points.len());
    let models = (1..=k_max)
        .map(|k| kmeans_cityblock(points, k, seed, options))
        .collect::<Result<Vec<_>>>()?;
    if points.len() < 3 {
        return Ok(GapSelection {
            k: 1,
            values: vec![GapValue {
                k: 1,
                log_w: log_dispersion(points, &models[0]),
                gap: 0.0,
                s: 0.0,
            }],
            models,
        });
    }

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }

    let mut ref_logs = vec![Vec::with_capacity(reference_sets); k_max];
    for b in 0..reference_sets {
        let mut rng = stream_rng(seed, REFERENCE_STREAM + b as u64);
        let reference: Vec<Point> = (0..points.len())
            .map(|_| {
                [
                    lo[0] + (hi[0] - lo[0]) * rng.gen::<f64>(),
                    lo[1] + (hi[1] - lo[1]) * rng.gen::<f64>(),
                ]
            })
            .collect();
        for k in 1..=k_max {
            let m = kmeans_cityblock(&reference, k, seed ^ (b as u64 + 1), options)?;
            ref_logs[k - 1].push(log_dispersion(&reference, &m));
        }
    }

    let scale = (1.0 + 1.0 / reference_sets as f64).sqrt();
    let values: Vec<GapValue> = (1..=k_max)
        .map(|k| {
            let logs = &ref_logs[k - 1];
            let mean = logs.iter().sum::<f64>() / logs.len() as f64;
            let sd =
                (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
            let log_w = log_dispersion(points, &models[k - 1]);
            GapValue {
                k,
                log_w,
                gap: mean - log_w,
                s: sd * scale,
            }
        })
        .collect();

    let k = (1..k_max)
        .find(|&k| values[k - 1].gap >= values[k].gap - values[k].s)
        .unwrap_or(k_max);
    Ok(GapSelection { k, values, models })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn opts() -> KMeansOptions {
        KMeansOptions::default()
    }

    #[test]
    fn dispersion_counts_each_pair_once_per_cluster() {
        // Cluster {0, 1, 3}: pair distances 1, 3, 2 -> 6 / 3 = 2.
        // Cluster {10, 20}: 10 / 2 = 5.
        let pts = [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [10.0, 0.0], [20.0, 0.0]];
        let model = ClusterModel {
            k: 2,
            centroids: vec![[1.0, 0.0], [15.0, 0.0]],
            assignment: vec![0, 0, 0, 1, 1],
            cost: 0.0,
        };
        assert!((log_dispersion(&pts, &model) - 7.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fewer_than_three_points_is_one_cluster() {
        let s = gap_select_k(&[[0.0, 0.0], [5.0, 5.0]], 3, 10, 0, opts()).unwrap();
        assert_eq!(s.k, 1);
    }

    #[test]
    fn uniform_square_prefers_one_cluster() {
        let mut ones = 0;
        let runs = 40;
        for seed in 0..runs {
            let mut rng = stream_rng(1000 + seed, 0);
            let pts: Vec<Point> = (0..200).map(|_| [rng.gen(), rng.gen()]).collect();
            if gap_select_k(&pts, 3, 10, seed, opts()).unwrap().k == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / runs as f64;
        assert!(freq >= 0.8, "K=1 frequency {freq}");
    }

    #[test]
    fn three_clouds_give_three_clusters() {
        let mut threes = 0;
        let runs = 40;
        for seed in 0..runs {
            let mut rng = stream_rng(2000 + seed, 0);
            let d = Normal::new(0.0, 0.3).unwrap();
            let mut pts = Vec::new();
            for c in [[0.0, 0.0], [4.0, 0.0], [2.0, 3.5]] {
                for _ in 0..60 {
                    pts.push([c[0] + d.sample(&mut rng), c[1] + d.sample(&mut rng)]);
                }
            }
            if gap_select_k(&pts, 3, 10, seed, opts()).unwrap().k == 3 {
                threes += 1;
            }
        }
        let freq = threes as f64 / runs as f64;
        assert!(freq >= 0.95, "K=3 frequency {freq}");
    }
}
