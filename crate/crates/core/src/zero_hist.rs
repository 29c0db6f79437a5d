//! Noise level estimation and the noise-assisted histogram of zero positions.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::signals::{stream_rng, Signal};
use crate::tf::{find_grid_minima, Grid, Margin, Stft, StftConfig, StftPlan};

use rand_distr::{Distribution, StandardNormal};

/// `1/Φ⁻¹(3/4)`, rounded as is customary for the MAD estimator.
const MAD_NORMAL: f64 = 0.6745;

/// Robust noise standard deviation from the one-sided STFT:
/// `√2 / 0.6745 · median |Re V[n, q]|`.
///
/// The real part of the STFT of white noise with per-sample variance `σ²`
/// and a unit-energy window has variance `σ²/2`, hence the `√2`.
pub fn estimate_noise_std(v: &Stft) -> f64 {
    let mut re: Vec<f64> = v.values.iter().map(|c| c.re.abs()).collect();
    if re.is_empty() {
        return 0.0;
    }
    std::f64::consts::SQRT_2 / MAD_NORMAL * median_in_place(&mut re)
}

pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Counts of new zeros per grid cell over `J` noise realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    pub counts: Grid<u32>,
    pub realizations: usize,
    pub gamma_noise_sq: f64,
}

impl Histogram2D {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Cellwise sum of two histograms of the same grid.
    pub fn merged(&self, other: &Histogram2D) -> Result<Histogram2D> {
        if self.counts.shape() != other.counts.shape() {
            return Err(invalid("histogram shapes differ"));
        }
        let mut counts = self.counts.clone();
        for (q, n) in cells(counts.shape()) {
            *counts.get_mut(q, n) += *other.counts.get(q, n);
        }
        Ok(Histogram2D {
            counts,
            realizations: self.realizations + other.realizations,
            gamma_noise_sq: self.gamma_noise_sq,
        })
    }
}

fn cells((n_freq, n_time): (usize, usize)) -> impl Iterator<Item = (usize, usize)> {
    (0..n_time).flat_map(move |n| (0..n_freq).map(move |q| (q, n)))
}

/// Realizations `j ∈ range` of the perturbed zero search, each with its own
/// noise stream `(seed, j)`. The reduction is an integer sum, so the result
/// does not depend on how rayon splits the range.
fn accumulate(
    y: &Signal,
    plan: &StftPlan,
    margin: Margin,
    gamma_noise_sq: f64,
    seed: u64,
    range: std::ops::Range<u64>,
) -> Grid<u32> {
    let shape = (plan.n_freq(), y.len());
    let std = gamma_noise_sq.sqrt();
    range
        .into_par_iter()
        .fold(
            || {
                (
                    Grid::filled(shape.0, shape.1, 0u32),
                    Grid::filled(shape.0, shape.1, 0.0f64),
                    vec![0.0f64; y.len()],
                )
            },
            |(mut counts, mut spec, mut noisy), j| {
                let mut rng = stream_rng(seed, j);
                for (dst, src) in noisy.iter_mut().zip(y.samples()) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *dst = src + std * z;
                }
                plan.spectrogram_into(&noisy, &mut spec);
                for z in find_grid_minima(&spec, margin).coords {
                    *counts.get_mut(z.q, z.n) += 1;
                }
                (counts, spec, noisy)
            },
        )
        .map(|(counts, _, _)| counts)
        .reduce(
            || Grid::filled(shape.0, shape.1, 0u32),
            |mut a, b| {
                for (q, n) in cells(shape) {
                    *a.get_mut(q, n) += *b.get(q, n);
                }
                a
            },
        )
}

/// Adds `J` independent white Gaussian noise realizations of variance
/// `gamma_noise_sq` to `y` and counts, per grid cell, how many times a
/// spectrogram zero falls there. Realization `j` (1-based) uses noise
/// stream `(seed, j)`; the original zeros of `y` are not counted.
///
/// New zeros are searched on the whole grid ([`Margin::FULL_GRID`]), not
/// only inside the margin of `cfg`: a ball around an original zero near
/// the margin must not lose the counts that fall beyond it.
pub fn zeros_histogram(
    y: &Signal,
    realizations: usize,
    gamma_noise_sq: f64,
    seed: u64,
    cfg: &StftConfig,
) -> Result<Histogram2D> {
    let mut all = zeros_histogram_snapshots(y, &[realizations], gamma_noise_sq, seed, cfg)?;
    Ok(all.remove(0))
}

/// Histograms for several `J` values from one pass: the histogram for `J`
/// uses realizations `1..=J`, so each snapshot extends the previous one.
pub fn zeros_histogram_snapshots(
    y: &Signal,
    realization_counts: &[usize],
    gamma_noise_sq: f64,
    seed: u64,
    cfg: &StftConfig,
) -> Result<Vec<Histogram2D>> {
    if realization_counts.iter().any(|&j| j < 1) {
        return Err(invalid("number of realizations must be at least 1"));
    }
    if !(gamma_noise_sq >= 0.0 && gamma_noise_sq.is_finite()) {
        return Err(invalid(format!(
            "noise variance must be finite and non-negative, got {gamma_noise_sq}"
        )));
    }
    let plan = cfg.plan()?;
    histogram_snapshots_with(y, &plan, realization_counts, gamma_noise_sq, seed)
}

pub(crate) fn histogram_snapshots_with(
    y: &Signal,
    plan: &StftPlan,
    realization_counts: &[usize],
    gamma_noise_sq: f64,
    seed: u64,
) -> Result<Vec<Histogram2D>> {
    let mut order: Vec<usize> = realization_counts.to_vec();
    order.sort_unstable();
    order.dedup();

    let mut done = 0usize;
    let mut running = Grid::filled(plan.n_freq(), y.len(), 0u32);
    let mut snapshots = Vec::with_capacity(order.len());
    for &j_max in &order {
        let part = accumulate(
            y,
            plan,
            Margin::FULL_GRID,
            gamma_noise_sq,
            seed,
            done as u64 + 1..j_max as u64 + 1,
        );
        for (q, n) in cells(running.shape()) {
            *running.get_mut(q, n) += *part.get(q, n);
        }
        done = j_max;
        snapshots.push((j_max, running.clone()));
    }
    Ok(realization_counts
        .iter()
        .map(|j| {
            let (_, counts) = snapshots.iter().find(|(k, _)| k == j).expect("snapshot");
            Histogram2D {
                counts: counts.clone(),
                realizations: *j,
                gamma_noise_sq,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{triple_tone, white_gaussian_noise, NoiseSpec, ToneTriplet};
    use crate::tf::{find_zeros, Grid};
    use rustfft::num_complex::Complex64;

    fn cfg() -> StftConfig {
        StftConfig::new(8.0)
    }

    fn test_signal() -> Signal {
        let x = triple_tone(&ToneTriplet::new(0.25, 3.0, 8.0), 96, 1.0).unwrap();
        let n = white_gaussian_noise(96, NoiseSpec::new(0.05, 1, 0)).unwrap();
        x.add(&n).unwrap()
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_in_place(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn mad_of_zero_transform_is_zero() {
        let plan = cfg().plan().unwrap();
        let v = plan.stft(&Signal::zeros(40, 1.0).unwrap());
        assert_eq!(estimate_noise_std(&v), 0.0);
    }

    #[test]
    fn mad_is_homogeneous() {
        let plan = cfg().plan().unwrap();
        let v = plan.stft(&test_signal());
        let base = estimate_noise_std(&v);
        for c in [0.5, 3.0, 17.0] {
            let scaled = estimate_noise_std(&v.scaled(c));
            assert!((scaled - c * base).abs() <= 1e-12 * c * base);
        }
    }

    #[test]
    fn mad_of_single_cell() {
        let plan = cfg().plan().unwrap();
        let mut v = plan.stft(&Signal::zeros(1, 1.0).unwrap());
        v.values = Grid::filled(1, 1, Complex64::new(-0.6745, 5.0));
        assert!((estimate_noise_std(&v) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn zero_perturbation_repeats_original_zeros() {
        let y = test_signal();
        let plan = cfg().plan().unwrap();
        let z0 = find_zeros(&plan.spectrogram(&y), Margin::FULL_GRID);
        let h = zeros_histogram(&y, 5, 0.0, 3, &cfg()).unwrap();
        let (n_freq, n_time) = h.counts.shape();
        for n in 0..n_time {
            for q in 0..n_freq {
                let expect = if z0.coords.contains(&crate::tf::ZeroCoord { n, q }) {
                    5
                } else {
                    0
                };
                assert_eq!(*h.counts.get(q, n), expect);
            }
        }
    }

    #[test]
    fn counts_are_conserved_and_bounded() {
        let y = test_signal();
        let plan = cfg().plan().unwrap();
        let margin = Margin::FULL_GRID;
        let gamma_sq = 0.05;
        let j = 12;
        let h = zeros_histogram(&y, j, gamma_sq, 42, &cfg()).unwrap();
        let mut total = 0u64;
        for jj in 1..=j as u64 {
            let mut rng = stream_rng(42, jj);
            let noisy: Vec<f64> = y
                .samples()
                .iter()
                .map(|s| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    s + gamma_sq.sqrt() * z
                })
                .collect();
            let s = plan.spectrogram(&Signal::from_samples(noisy).unwrap());
            total += find_zeros(&s, margin).len() as u64;
        }
        assert_eq!(h.total(), total);
        assert!(h.max_count() as usize <= j);
    }

    #[test]
    fn histograms_add_over_disjoint_realizations() {
        let y = test_signal();
        let snaps = zeros_histogram_snapshots(&y, &[4, 8], 0.05, 9, &cfg()).unwrap();
        let direct = zeros_histogram(&y, 8, 0.05, 9, &cfg()).unwrap();
        assert_eq!(snaps[1].counts, direct.counts);
        assert!(snaps[0].total() <= snaps[1].total());
        let h4 = zeros_histogram(&y, 4, 0.05, 9, &cfg()).unwrap();
        assert_eq!(snaps[0].counts, h4.counts);
    }

    #[test]
    fn rejects_zero_realizations() {
        assert!(zeros_histogram(&test_signal(), 0, 0.1, 0, &cfg()).is_err());
        assert!(zeros_histogram(&test_signal(), 3, -0.1, 0, &cfg()).is_err());
    }
}
