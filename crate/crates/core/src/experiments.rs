//! Monte-Carlo harnesses: classification accuracy over `(r, J, SNR)`,
//! detection rates of the cluster-count test, and reconstruction quality
//! of the denoising methods.
//!
//! Repetitions run in parallel; each one draws from its own noise streams,
//! so reports depend only on the configuration and the seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::classify::ground_truth::{accuracy, GroundTruth, DEFAULT_BAND};
use crate::classify::{classify_with_histogram, classify_zeros, ClassifierConfig};
use crate::error::{invalid, Result};
use crate::signals::{
    linear_chirp, mix_at_snr, triple_tone, white_gaussian_noise, NoiseSpec, Signal, ToneTriplet,
};
use crate::tf::{find_zeros, spectrogram, StftConfig};
use crate::tf_filter::{denoise, qrf, DenoiseConfig, DenoiseMethod};
use crate::zero_hist::{estimate_noise_std, histogram_snapshots_with};

/// First stream of the additive noise of the test signals; histogram
/// realizations use streams `1..=J` of their own seeds.
const SIGNAL_NOISE_STREAM: u64 = 1 << 40;

/// SplitMix64 finalizer, used to derive independent per-repetition seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sub_seed(seed: u64, a: u64, b: u64) -> u64 {
    mix(mix(mix(seed) ^ a) ^ b)
}

/// STFT setup of the experiments for `n`-sample signals: `2n` bins and the
/// window width `√(2n)` that makes the grid isotropic.
pub fn experiment_stft(n: usize) -> StftConfig {
    let n_fft = 2 * n;
    StftConfig::new((n_fft as f64).sqrt()).with_n_fft(n_fft)
}

/// Type-7 quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Exact two-sided Clopper–Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(invalid(format!("invalid proportion {k}/{n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!(
            "confidence must be in (0, 1), got {confidence}"
        )));
    }
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let beta = |a: f64, b: f64| Beta::new(a, b).map_err(|e| invalid(e.to_string()));
    let lo = if k == 0 {
        0.0
    } else {
        beta(kf, nf - kf + 1.0)?.inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        beta(kf + 1.0, nf - kf)?.inverse_cdf(1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Parameter grid of the accuracy sweep on the three-tone signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub j_values: Vec<usize>,
    /// Ball radii as multiples of the window width `T`.
    pub r_factors: Vec<f64>,
    pub snr_values: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub f2: f64,
    pub theta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            j_values: vec![64, 128, 256, 512, 1024],
            r_factors: vec![1.0 / 8.0, 2.0 / 8.0, 3.0 / 8.0, 4.0 / 8.0, 5.0 / 8.0],
            snr_values: vec![0.0, 5.0, 10.0, 20.0, 30.0],
            repetitions: 100,
            seed: 0,
            n_samples: 256,
            f2: 0.25,
            theta: 3.0,
        }
    }
}

impl SweepConfig {
    /// `J = 512` only, SNR 10/20/30 dB, 20 repetitions.
    pub fn quick() -> Self {
        Self {
            j_values: vec![512],
            snr_values: vec![10.0, 20.0, 30.0],
            repetitions: 20,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.j_values.is_empty() || self.j_values.contains(&0) {
            return Err(invalid("J values must be positive"));
        }
        if self.r_factors.is_empty() || self.r_factors.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("radius factors must be positive"));
        }
        if self.snr_values.is_empty() || self.snr_values.iter().any(|s| !s.is_finite()) {
            return Err(invalid("SNR values must be finite"));
        }
        if self.repetitions < 1 {
            return Err(invalid("at least one repetition is required"));
        }
        if self.n_samples < 16 {
            return Err(invalid("signals need at least 16 samples"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub j: usize,
    pub r_factor: f64,
    pub snr_db: f64,
    pub repetitions: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub window_width: f64,
    pub n_fft: usize,
    pub cells: Vec<AccuracyCell>,
}

impl SweepReport {
    pub fn cell(&self, j: usize, r_factor: f64, snr_db: f64) -> Option<&AccuracyCell> {
        self.cells
            .iter()
            .find(|c| c.j == j && c.r_factor == r_factor && c.snr_db == snr_db)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,r_over_t,snr_db,repetitions,median,q25,q75\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.j, c.r_factor, c.snr_db, c.repetitions, c.median, c.q25, c.q75
            ));
        }
        out
    }
}

/// Classification accuracy against the geometric reference labels for
/// every `(J, r, SNR)` of `cfg`. One histogram pass per repetition and SNR
/// serves all `J` (as nested prefixes of the same realizations) and all `r`.
pub fn accuracy_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let stft = experiment_stft(cfg.n_samples);
    let width = stft.window_width;
    let plan = stft.plan()?;
    let margin = stft.resolved_margin(plan.n_fft());
    let spec = ToneTriplet::new(cfg.f2, cfg.theta, width);
    spec.validate(1.0)?;
    let clean = triple_tone(&spec, cfg.n_samples, 1.0)?;

    // acc[snr][rep][j][r]
    let per_snr: Vec<Vec<Vec<Vec<f64>>>> = cfg
        .snr_values
        .iter()
        .enumerate()
        .map(|(si, &snr)| {
            (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| -> Result<Vec<Vec<f64>>> {
                    let noise = white_gaussian_noise(
                        cfg.n_samples,
                        NoiseSpec::new(1.0, cfg.seed, SIGNAL_NOISE_STREAM + rep as u64),
                    )?;
                    let m = mix_at_snr(&clean, &noise, snr)?;
                    let v = plan.stft(&m.mixture);
                    let sd = estimate_noise_std(&v);
                    let zeros = find_zeros(&spectrogram(&v), margin);
                    let seed = sub_seed(cfg.seed, si as u64, rep as u64);
                    let hists =
                        histogram_snapshots_with(&m.mixture, &plan, &cfg.j_values, sd * sd, seed)?;
                    let mut ccfg = ClassifierConfig::new(width);
                    ccfg.stft = stft;
                    ccfg.seed = seed;
                    hists
                        .iter()
                        .map(|h| {
                            cfg.r_factors
                                .iter()
                                .map(|rf| {
                                    let r = rf * width;
                                    let truth = GroundTruth::triple_tone(
                                        &spec,
                                        &clean,
                                        m.noise_std * m.noise_std,
                                        &plan,
                                        r,
                                        DEFAULT_BAND,
                                    )?
                                    .labels(&zeros);
                                    if zeros.is_empty() {
                                        return Ok(1.0);
                                    }
                                    let (labels, ..) =
                                        classify_with_histogram(&zeros, h, r, &ccfg)?;
                                    Ok(accuracy(&labels, &truth))
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (si, &snr) in cfg.snr_values.iter().enumerate() {
        for (ji, &j) in cfg.j_values.iter().enumerate() {
            for (ri, &rf) in cfg.r_factors.iter().enumerate() {
                let mut accs: Vec<f64> = per_snr[si].iter().map(|rep| rep[ji][ri]).collect();
                accs.sort_by(f64::total_cmp);
                cells.push(AccuracyCell {
                    j,
                    r_factor: rf,
                    snr_db: snr,
                    repetitions: accs.len(),
                    median: quantile(&accs, 0.5),
                    q25: quantile(&accs, 0.25),
                    q75: quantile(&accs, 0.75),
                });
            }
        }
    }
    Ok(SweepReport {
        config: cfg.clone(),
        window_width: width,
        n_fft: plan.n_fft(),
        cells,
    })
}

/// Detection by cluster count: `K = 1` means noise only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Signals per condition (noise only, and chirp at each SNR).
    pub n_signals: usize,
    pub snr_values: Vec<f64>,
    pub realizations: usize,
    pub r_factor: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub chirp_start: f64,
    pub chirp_end: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            n_signals: 200,
            snr_values: vec![0.0, 5.0, 10.0],
            realizations: 1024,
            r_factor: 3.0 / 8.0,
            seed: 0,
            n_samples: 256,
            chirp_start: 0.1,
            chirp_end: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    /// `"noise"` or `"chirp"`.
    pub condition: String,
    pub snr_db: Option<f64>,
    /// `"specificity"` for noise only, `"sensitivity"` otherwise.
    pub measure: String,
    pub n: usize,
    /// Runs counted as correct: `K = 1` for noise, `K > 1` for the chirp.
    pub successes: usize,
    pub proportion: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub config: DetectionConfig,
    pub window_width: f64,
    pub n_fft: usize,
    pub rows: Vec<DetectionRow>,
}

impl DetectionReport {
    pub fn specificity(&self) -> Option<&DetectionRow> {
        self.rows.iter().find(|r| r.condition == "noise")
    }

    pub fn sensitivity(&self, snr_db: f64) -> Option<&DetectionRow> {
        self.rows
            .iter()
            .find(|r| r.condition == "chirp" && r.snr_db == Some(snr_db))
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("condition,snr_db,measure,n,successes,proportion,ci_low,ci_high\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.condition,
                fmt_opt(r.snr_db),
                r.measure,
                r.n,
                r.successes,
                r.proportion,
                r.ci_low,
                r.ci_high
            ));
        }
        out
    }
}

/// Specificity on noise-only signals and sensitivity on chirp mixtures,
/// with 95 % Clopper–Pearson intervals.
pub fn detection_experiment(cfg: &DetectionConfig) -> Result<DetectionReport> {
    if cfg.n_signals < 1 {
        return Err(invalid("at least one signal per condition is required"));
    }
    if cfg.realizations < 1 || !(cfg.r_factor > 0.0) {
        return Err(invalid("J and r must be positive"));
    }
    let stft = experiment_stft(cfg.n_samples);
    let width = stft.window_width;
    let n_fft = stft.plan()?.n_fft();
    let chirp = linear_chirp(cfg.chirp_start, cfg.chirp_end, cfg.n_samples, 1.0)?;

    let clusters = |condition: u64, snr: Option<f64>| -> Result<Vec<usize>> {
        (0..cfg.n_signals)
            .into_par_iter()
            .map(|i| {
                let stream = SIGNAL_NOISE_STREAM + (condition << 24) + i as u64;
                let noise =
                    white_gaussian_noise(cfg.n_samples, NoiseSpec::new(1.0, cfg.seed, stream))?;
                let y: Signal = match snr {
                    None => noise,
                    Some(s) => mix_at_snr(&chirp, &noise, s)?.mixture,
                };
                let mut ccfg = ClassifierConfig::new(width);
                ccfg.stft = stft;
                ccfg.realizations = cfg.realizations;
                ccfg.radius = Some(cfg.r_factor * width);
                ccfg.seed = sub_seed(cfg.seed, condition, i as u64);
                Ok(classify_zeros(&y, &ccfg)?.k())
            })
            .collect()
    };

    let mut rows = Vec::new();
    let push = |rows: &mut Vec<DetectionRow>, cond: &str, snr, measure: &str, hits: usize| {
        let (lo, hi) = clopper_pearson(hits, cfg.n_signals, 0.95)?;
        rows.push(DetectionRow {
            condition: cond.to_string(),
            snr_db: snr,
            measure: measure.to_string(),
            n: cfg.n_signals,
            successes: hits,
            proportion: hits as f64 / cfg.n_signals as f64,
            ci_low: lo,
            ci_high: hi,
        });
        Ok::<_, crate::Error>(())
    };
    let noise_k = clusters(0, None)?;
    push(
        &mut rows,
        "noise",
        None,
        "specificity",
        noise_k.iter().filter(|&&k| k == 1).count(),
    )?;
    for (si, &snr) in cfg.snr_values.iter().enumerate() {
        let ks = clusters(si as u64 + 1, Some(snr))?;
        push(
            &mut rows,
            "chirp",
            Some(snr),
            "sensitivity",
            ks.iter().filter(|&&k| k > 1).count(),
        )?;
    }
    Ok(DetectionReport {
        config: cfg.clone(),
        window_width: width,
        n_fft,
        rows,
    })
}

/// Reconstruction quality of several denoising methods on the three-tone
/// signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrfConfig {
    pub snr_values: Vec<f64>,
    pub methods: Vec<DenoiseMethod>,
    pub repetitions: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub realizations: usize,
    pub f2: f64,
    pub theta: f64,
}

impl Default for QrfConfig {
    fn default() -> Self {
        Self {
            snr_values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            methods: vec![
                DenoiseMethod::Classified,
                DenoiseMethod::EdgeLength { l_max: 1.3 },
                DenoiseMethod::EdgeLength { l_max: 1.5 },
            ],
            repetitions: 200,
            seed: 0,
            n_samples: 256,
            realizations: 512,
            f2: 0.25,
            theta: 3.0,
        }
    }
}

pub fn method_label(m: &DenoiseMethod) -> String {
    match m {
        DenoiseMethod::Identity => "identity".to_string(),
        DenoiseMethod::EdgeLength { l_max } => format!("edge({l_max})"),
        DenoiseMethod::Classified => "classified".to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrfRow {
    pub method: String,
    pub snr_db: f64,
    pub repetitions: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrfReport {
    pub config: QrfConfig,
    pub window_width: f64,
    pub n_fft: usize,
    pub rows: Vec<QrfRow>,
}

impl QrfReport {
    pub fn row(&self, method: &DenoiseMethod, snr_db: f64) -> Option<&QrfRow> {
        let label = method_label(method);
        self.rows
            .iter()
            .find(|r| r.method == label && r.snr_db == snr_db)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,snr_db,repetitions,mean,std\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.method, r.snr_db, r.repetitions, r.mean, r.std
            ));
        }
        out
    }

    /// One row per SNR with a mean and a std column per method.
    pub fn table_csv(&self) -> String {
        let labels: Vec<String> = self.config.methods.iter().map(method_label).collect();
        let mut out = String::from("snr_db");
        for l in &labels {
            out.push_str(&format!(",{l}_mean,{l}_std"));
        }
        out.push('\n');
        for &snr in &self.config.snr_values {
            out.push_str(&snr.to_string());
            for m in &self.config.methods {
                match self.row(m, snr) {
                    Some(r) => out.push_str(&format!(",{},{}", r.mean, r.std)),
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Mean and standard deviation of the QRF of each method at each SNR. All
/// methods see the same noisy signals.
pub fn qrf_comparison(cfg: &QrfConfig) -> Result<QrfReport> {
    if cfg.repetitions < 1 || cfg.methods.is_empty() || cfg.snr_values.is_empty() {
        return Err(invalid("need at least one repetition, method and SNR"));
    }
    let stft = experiment_stft(cfg.n_samples);
    let width = stft.window_width;
    let n_fft = stft.plan()?.n_fft();
    let spec = ToneTriplet::new(cfg.f2, cfg.theta, width);
    spec.validate(1.0)?;
    let clean = triple_tone(&spec, cfg.n_samples, 1.0)?;

    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_values.iter().enumerate() {
        // q[rep][method]
        let q: Vec<Vec<f64>> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| {
                let noise = white_gaussian_noise(
                    cfg.n_samples,
                    NoiseSpec::new(1.0, cfg.seed, SIGNAL_NOISE_STREAM + rep as u64),
                )?;
                let y = mix_at_snr(&clean, &noise, snr)?.mixture;
                let mut ccfg = ClassifierConfig::new(width);
                ccfg.stft = stft;
                ccfg.realizations = cfg.realizations;
                ccfg.seed = sub_seed(cfg.seed, si as u64, rep as u64);
                let dcfg = DenoiseConfig::new(ccfg);
                cfg.methods
                    .iter()
                    .map(|&m| qrf(&clean, &denoise(&y, m, &dcfg)?.signal))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (mi, m) in cfg.methods.iter().enumerate() {
            let vals: Vec<f64> = q.iter().map(|r| r[mi]).collect();
            let (mean, std) = mean_std(&vals);
            rows.push(QrfRow {
                method: method_label(m),
                snr_db: snr,
                repetitions: vals.len(),
                mean,
                std,
            });
        }
    }
    Ok(QrfReport {
        config: cfg.clone(),
        window_width: width,
        n_fft,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn clopper_pearson_reference_values() {
        // 90/100 at 95 %: [0.8238, 0.9510] (exact binomial interval).
        let (lo, hi) = clopper_pearson(90, 100, 0.95).unwrap();
        assert!((lo - 0.8238).abs() < 5e-4, "{lo}");
        assert!((hi - 0.9510).abs() < 5e-4, "{hi}");
        assert_eq!(clopper_pearson(0, 10, 0.95).unwrap().0, 0.0);
        assert_eq!(clopper_pearson(10, 10, 0.95).unwrap().1, 1.0);
        assert!(clopper_pearson(3, 2, 0.95).is_err());
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(0, 0, 1), sub_seed(0, 1, 0));
        assert_ne!(sub_seed(0, 0, 0), sub_seed(1, 0, 0));
    }

    #[test]
    fn experiment_grid_is_isotropic() {
        let s = experiment_stft(256);
        assert_eq!(s.n_fft, Some(512));
        assert!((s.window_width * s.window_width - 512.0).abs() < 1e-9);
    }

    #[test]
    fn tiny_sweep_is_deterministic() {
        let cfg = SweepConfig {
            j_values: vec![8, 16],
            r_factors: vec![0.25, 0.375],
            snr_values: vec![20.0],
            repetitions: 3,
            n_samples: 96,
            ..SweepConfig::default()
        };
        let a = accuracy_sweep(&cfg).unwrap();
        let b = accuracy_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 4);
        for c in &a.cells {
            assert!((0.0..=1.0).contains(&c.median));
            assert!(c.q25 <= c.median && c.median <= c.q75);
        }
    }

    #[test]
    fn identity_qrf_equals_input_snr() {
        let cfg = QrfConfig {
            snr_values: vec![5.0, 12.0],
            methods: vec![DenoiseMethod::Identity],
            repetitions: 3,
            n_samples: 96,
            ..QrfConfig::default()
        };
        let r = qrf_comparison(&cfg).unwrap();
        for row in &r.rows {
            assert!((row.mean - row.snr_db).abs() < 0.1, "{row:?}");
        }
        let table = r.table_csv();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "snr_db,identity_mean,identity_std");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("5,"));
    }

    #[test]
    fn detection_rows_are_well_formed() {
        let cfg = DetectionConfig {
            n_signals: 3,
            snr_values: vec![10.0],
            realizations: 16,
            n_samples: 96,
            ..DetectionConfig::default()
        };
        let r = detection_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            assert!(row.ci_low <= row.proportion && row.proportion <= row.ci_high);
        }
        assert!(r.to_csv().lines().count() == 3);
    }
}
