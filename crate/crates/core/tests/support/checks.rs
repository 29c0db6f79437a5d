// Invariant checks shared by the property tests and the acceptance report.
// Each returns `Err` with a description of the first violation.

use tfzeros::classify::kmeans::lloyd_l1;
use tfzeros::classify::{shannon_entropy, Point};
use tfzeros::signals::{white_gaussian_noise, NoiseSpec, Signal};
use tfzeros::tf::{find_zeros, reconstruct, Grid, Margin, StftConfig, ZeroCoord, ZeroSet};
use tfzeros::tf_filter::{delaunay, qrf, select_by_edge_length, triangles_to_mask};
use tfzeros::zero_hist::{estimate_noise_std, zeros_histogram_snapshots};

pub type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn noise(n: usize, var: f64, seed: u64, stream: u64) -> Signal {
    white_gaussian_noise(n, NoiseSpec::new(var, seed, stream)).unwrap()
}

pub fn stft_linearity(n: usize, width: f64, a: f64, b: f64, seed: u64) -> Check {
    let plan = StftConfig::new(width).plan().unwrap();
    let x = noise(n, 1.0, seed, 1);
    let y = noise(n, 1.0, seed, 2);
    let combo = Signal::new(
        x.samples()
            .iter()
            .zip(y.samples())
            .map(|(p, q)| a * p + b * q)
            .collect(),
        1.0,
    )
    .unwrap();
    let (vx, vy, vc) = (plan.stft(&x), plan.stft(&y), plan.stft(&combo));
    let scale = 1.0 + a.abs() + b.abs();
    let worst = vx
        .values
        .iter()
        .zip(vy.values.iter())
        .zip(vc.values.iter())
        .map(|((p, q), c)| (c - (p * a + q * b)).norm())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-10 * scale * (n as f64).sqrt(), || {
        format!("linearity defect {worst:e} for a = {a}, b = {b}")
    })
}

/// Full-mask inversion, relative error on the samples at least `⌈T⌉` from
/// either end.
pub fn round_trip(n: usize, width: f64, seed: u64) -> Check {
    let plan = StftConfig::new(width).plan().unwrap();
    let x = noise(n, 1.0, seed, 3);
    let v = plan.stft(&x);
    let (nf, nt) = v.shape();
    let y = reconstruct(&v, &Grid::filled(nf, nt, true)).unwrap();
    let edge = width.ceil() as usize;
    let range = edge..n.saturating_sub(edge);
    let err: f64 = range
        .clone()
        .map(|i| (x.samples()[i] - y.samples()[i]).powi(2))
        .sum();
    let energy: f64 = range.map(|i| x.samples()[i].powi(2)).sum();
    let rel = (err / energy.max(f64::MIN_POSITIVE)).sqrt();
    ensure(rel < 1e-6, || {
        format!("relative reconstruction error {rel:e}")
    })
}

/// Totals match an independent count of the zeros of every realization, and
/// a longer run only adds counts.
pub fn histogram_conservation(n: usize, width: f64, j1: usize, j2: usize, seed: u64) -> Check {
    let cfg = StftConfig::new(width);
    let plan = cfg.plan().unwrap();
    let y = noise(n, 1.0, seed, 0).scaled(0.5);
    let gamma = 0.3;
    let hs = zeros_histogram_snapshots(&y, &[j1, j1 + j2], gamma, seed, &cfg).unwrap();
    let (h1, h2) = (&hs[0], &hs[1]);
    let per_realization: Vec<u64> = (1..=(j1 + j2) as u64)
        .map(|j| {
            let noisy = y.add(&noise(n, gamma, seed, j)).unwrap();
            find_zeros(&plan.spectrogram(&noisy), Margin::FULL_GRID).len() as u64
        })
        .collect();
    let first: u64 = per_realization[..j1].iter().sum();
    let all: u64 = per_realization.iter().sum();
    ensure(h1.total() == first, || {
        format!("J = {j1}: {} counted, {first} expected", h1.total())
    })?;
    ensure(h2.total() == all, || {
        format!("J = {}: {} counted, {all} expected", j1 + j2, h2.total())
    })?;
    ensure(
        h1.counts.iter().zip(h2.counts.iter()).all(|(a, b)| a <= b),
        || "a cell count decreased when realizations were added".into(),
    )?;
    ensure(h2.realizations == j1 + j2, || "realization count".into())
}

pub fn entropy_bounds(values: &[u32]) -> Check {
    let h = shannon_entropy(values);
    let total: u64 = values.iter().map(|&v| v as u64).sum();
    if total == 0 {
        return ensure(h.is_none(), || "empty ball must have no entropy".into());
    }
    let h = h.ok_or("missing entropy")?;
    let support = values.iter().filter(|&&v| v > 0).count() as f64;
    ensure(h >= -1e-12 && h <= support.log2() + 1e-12, || {
        format!("entropy {h} outside [0, log2 {support}]")
    })?;
    let mut point = vec![0u32; values.len()];
    point[0] = 5;
    let uniform = vec![3u32; values.len()];
    ensure(shannon_entropy(&point) == Some(0.0), || {
        "point mass entropy".into()
    })?;
    let u = shannon_entropy(&uniform).unwrap();
    ensure((u - (values.len() as f64).log2()).abs() < 1e-12, || {
        format!("uniform entropy {u} for {} cells", values.len())
    })
}

pub fn mad_homogeneity(n: usize, width: f64, c: f64, seed: u64) -> Check {
    let plan = StftConfig::new(width).plan().unwrap();
    let x = noise(n, 1.0, seed, 4);
    let s = estimate_noise_std(&plan.stft(&x));
    let sc = estimate_noise_std(&plan.stft(&x.scaled(c)));
    ensure(
        (sc - c.abs() * s).abs() <= 1e-12 * (1.0 + c.abs() * s),
        || format!("MAD of scaled input {sc}, expected {}", c.abs() * s),
    )?;
    let zero = Signal::zeros(n, 1.0).unwrap();
    ensure(estimate_noise_std(&plan.stft(&zero)) == 0.0, || {
        "MAD of zero input".into()
    })
}

pub fn qrf_identities(n: usize, c: f64, seed: u64) -> Check {
    let x = noise(n, 1.0, seed, 5);
    let e = noise(n, 0.01, seed, 6);
    ensure(qrf(&x, &x).unwrap() == f64::INFINITY, || {
        "qrf(x, x) must be infinite".into()
    })?;
    let zero = Signal::zeros(n, 1.0).unwrap();
    ensure(qrf(&x, &zero).unwrap().abs() < 1e-9, || {
        "qrf(x, 0) must be 0 dB".into()
    })?;
    let xh = x.add(&e).unwrap();
    let expected = 10.0 * (x.energy() / e.energy()).log10();
    let got = qrf(&x, &xh).unwrap();
    ensure((got - expected).abs() < 1e-6, || {
        format!("qrf {got}, expected {expected}")
    })?;
    let scaled = qrf(&x.scaled(c), &xh.scaled(c)).unwrap();
    ensure((scaled - got).abs() < 1e-6, || {
        format!("qrf not scale invariant: {scaled} vs {got}")
    })
}

pub fn kmeans_monotone(points: &[Point], init: Vec<Point>) -> Check {
    let run = lloyd_l1(points, init, 50);
    let h = &run.cost_history;
    ensure(h.windows(2).all(|w| w[1] <= w[0] + 1e-9), || {
        format!("cost increased: {h:?}")
    })
}

fn zero_set(coords: &[(usize, usize)]) -> ZeroSet {
    let mut c: Vec<ZeroCoord> = coords.iter().map(|&(n, q)| ZeroCoord { n, q }).collect();
    c.sort_by_key(|z| (z.n, z.q));
    c.dedup();
    ZeroSet {
        coords: c,
        margin: Margin::FULL_GRID,
        shape: (1024, 1024),
    }
}

fn cross(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Points on the boundary of the convex hull, collinear ones included.
fn hull_boundary_count(pts: &[[i64; 2]]) -> usize {
    let mut p = pts.to_vec();
    p.sort();
    let mut lower: Vec<[i64; 2]> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) < 0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<[i64; 2]> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) < 0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.len() + upper.len()
}

/// `#triangles = 2n − 2 − h` for a triangulation using every point, `h`
/// counting all points on the hull boundary. Checked on the isotropic grid
/// (`N = T²`) so that integer coordinates give the hull exactly.
pub fn delaunay_euler(coords: &[(usize, usize)]) -> Check {
    let z = zero_set(coords);
    let ts = delaunay(&z, 32.0, 1024).unwrap();
    let pts: Vec<[i64; 2]> = z.coords.iter().map(|c| [c.n as i64, c.q as i64]).collect();
    let n = pts.len();
    let collinear = pts.len() < 3 || pts.iter().all(|&p| cross(pts[0], pts[1], p) == 0);
    if collinear {
        return ensure(ts.is_empty() && ts.warning.is_some(), || {
            "degenerate set must warn".into()
        });
    }
    let h = hull_boundary_count(&pts);
    ensure(ts.len() == 2 * n - 2 - h, || {
        format!("{} triangles for n = {n}, h = {h}", ts.len())
    })?;
    // Empty circumcircle, exact in integers.
    for t in &ts.triangles {
        let [a, b, c] = t.map(|i| pts[i]);
        let orient = cross(a, b, c);
        for (i, &d) in pts.iter().enumerate() {
            if t.contains(&i) {
                continue;
            }
            let rows = [a, b, c].map(|p| {
                let (dx, dy) = ((p[0] - d[0]) as i128, (p[1] - d[1]) as i128);
                [dx, dy, dx * dx + dy * dy]
            });
            let det = rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
                - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
                + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]);
            let inside = if orient > 0 { det > 0 } else { det < 0 };
            ensure(!inside, || {
                format!("point {d:?} inside circumcircle of {t:?}")
            })?;
        }
    }
    Ok(())
}

/// A larger edge threshold selects fewer triangles, so its mask is contained
/// in the mask of a smaller threshold.
pub fn mask_monotone(coords: &[(usize, usize)], l1: f64, l2: f64) -> Check {
    let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
    let z = zero_set(coords);
    let ts = delaunay(&z, 8.0, 64).unwrap();
    let shape = (80, 80);
    let a = triangles_to_mask(&select_by_edge_length(&ts, lo).unwrap(), shape);
    let b = triangles_to_mask(&select_by_edge_length(&ts, hi).unwrap(), shape);
    let nested = a.iter().zip(b.iter()).all(|(x, y)| *x || !*y);
    ensure(nested, || {
        format!("mask for l_max = {hi} not inside mask for {lo}")
    })
}

/// Spacing statistics of the zeros of white noise, in units of `T`.
pub struct Spacing {
    /// `1 / sqrt(zeros per unit area)` over the searched region.
    pub density: f64,
    /// Mean edge length of triangles away from the margin.
    pub delaunay_edge: f64,
    /// Mean distance to the nearest other zero.
    pub nearest_neighbour: f64,
}

pub fn noise_zero_spacing(n: usize, width: f64, seeds: std::ops::Range<u64>) -> Spacing {
    let cfg = StftConfig::new(width);
    let plan = cfg.plan().unwrap();
    let margin = cfg.resolved_margin(plan.n_fft());
    let (mut zeros, mut area) = (0usize, 0.0);
    let (mut edge_sum, mut edge_count) = (0.0, 0usize);
    let (mut nn_sum, mut nn_count) = (0.0, 0usize);
    for seed in seeds {
        let x = noise(n, 1.0, seed, 0);
        let s = plan.spectrogram(&x);
        let z = find_zeros(&s, margin);
        let (nf, nt) = s.shape();
        zeros += z.len();
        area += (nt - 2 * margin.time) as f64 / width
            * ((nf - 2 * margin.freq) as f64 * width / plan.n_fft() as f64);
        let ts = delaunay(&z, width, plan.n_fft()).unwrap();
        for (t, tri) in ts.triangles.iter().enumerate() {
            if tri.iter().any(|&v| z.on_margin_boundary(z.coords[v])) {
                continue;
            }
            edge_sum += ts.edge_lengths[t].iter().sum::<f64>();
            edge_count += 3;
        }
        for (i, p) in ts.points.iter().enumerate() {
            if z.on_margin_boundary(z.coords[i]) {
                continue;
            }
            let d = ts
                .points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            nn_sum += d;
            nn_count += 1;
        }
    }
    Spacing {
        density: (area / zeros as f64).sqrt(),
        delaunay_edge: edge_sum / edge_count as f64,
        nearest_neighbour: nn_sum / nn_count as f64,
    }
}
