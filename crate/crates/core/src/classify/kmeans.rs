//! K-means with the cityblock (L1) distance.
//!
//! Assignment uses the L1 distance and the centroid update is the
//! coordinate-wise median, which minimizes the summed L1 distance of the
//! members. Both steps are non-increasing in the total cost.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signals::stream_rng;
use crate::zero_hist::median_in_place;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
        }
    }
}

/// A fitted partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Point>,
    pub assignment: Vec<usize>,
    /// Total L1 distance of the points to their centroids.
    pub cost: f64,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

#[inline]
pub fn l1(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = l1(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub fn total_cost(points: &[Point], centroids: &[Point], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &a)| l1(p, &centroids[a]))
        .sum()
}

fn coordinate_median(points: &[Point], members: &[usize]) -> Point {
    let mut xs: Vec<f64> = members.iter().map(|&i| points[i][0]).collect();
    let mut ys: Vec<f64> = members.iter().map(|&i| points[i][1]).collect();
    [median_in_place(&mut xs), median_in_place(&mut ys)]
}

/// Outcome of one Lloyd run, with the cost after every update step.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub centroids: Vec<Point>,
    pub assignment: Vec<usize>,
    pub cost_history: Vec<f64>,
}

/// Lloyd iterations from the given centroids until the assignment is fixed
/// or `max_iter` is reached. An empty cluster is re-seeded with the point
/// farthest from its centroid.
pub fn lloyd_l1(points: &[Point], init: Vec<Point>, max_iter: usize) -> LloydRun {
    let k = init.len();
    let mut centroids = init;
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = vec![total_cost(points, &centroids, &assignment)];
    for _ in 0..max_iter.max(1) {
        let mut members = vec![Vec::new(); k];
        for (i, &a) in assignment.iter().enumerate() {
            members[a].push(i);
        }
        for c in 0..k {
            if members[c].is_empty() {
                // Farthest point among clusters that can spare one.
                let donor = (0..points.len())
                    .filter(|&i| members[assignment[i]].len() > 1)
                    .max_by(|&a, &b| {
                        let da = l1(&points[a], &centroids[assignment[a]]);
                        let db = l1(&points[b], &centroids[assignment[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    });
                if let Some(i) = donor {
                    let old = assignment[i];
                    members[old].retain(|&m| m != i);
                    members[c].push(i);
                    assignment[i] = c;
                }
            }
        }
        for c in 0..k {
            if !members[c].is_empty() {
                centroids[c] = coordinate_median(points, &members[c]);
            }
        }
        history.push(total_cost(points, &centroids, &assignment));
        let next: Vec<usize> = points
            .iter()
            .zip(&assignment)
            .map(|(p, &cur)| {
                // Keep the current cluster on ties so the cost cannot rise.
                let (best, d) = nearest(p, &centroids);
                if l1(p, &centroids[cur]) <= d {
                    cur
                } else {
                    best
                }
            })
            .collect();
        if next == assignment {
            break;
        }
        assignment = next;
        history.push(total_cost(points, &centroids, &assignment));
    }
    LloydRun {
        centroids,
        assignment,
        cost_history: history,
    }
}

/// k-means++ seeding with L1 distances.
fn seed_centroids(points: &[Point], k: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())]];
    let mut dist: Vec<f64> = points.iter().map(|p| l1(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, d) in dist.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[idx];
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(l1(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Best of `restarts` seeded Lloyd runs (lowest total L1 cost).
pub fn kmeans_cityblock(
    points: &[Point],
    k: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<ClusterModel> {
    if k == 0 {
        return Err(invalid("number of clusters must be at least 1"));
    }
    if points.len() < k {
        return Err(invalid(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    if k == 1 {
        let all: Vec<usize> = (0..points.len()).collect();
        let c = coordinate_median(points, &all);
        let assignment = vec![0; points.len()];
        return Ok(ClusterModel {
            k,
            cost: total_cost(points, &[c], &assignment),
            centroids: vec![c],
            assignment,
        });
    }
    let mut best: Option<ClusterModel> = None;
    for restart in 0..options.restarts.max(1) {
        let mut rng = stream_rng(seed, restart as u64);
        let init = seed_centroids(points, k, &mut rng);
        let run = lloyd_l1(points, init, options.max_iter);
        let cost = total_cost(points, &run.centroids, &run.assignment);
        if best.as_ref().map_or(true, |b| cost < b.cost) {
            best = Some(ClusterModel {
                k,
                centroids: run.centroids,
                assignment: run.assignment,
                cost,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}
