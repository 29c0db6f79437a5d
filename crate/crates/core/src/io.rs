//! File formats: signals (CSV, 16-bit mono WAV), matrices and masks (CSV),
//! and the JSON records written by the command-line tool.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::{Classification, ClassifierConfig, ZeroKind};
use crate::error::{Error, Result};
use crate::signals::Signal;
use crate::tf::{Grid, Mask};
use crate::tf_filter::TriangleSet;

/// C-style `%.{precision}g`: `precision` significant digits, trailing zeros
/// removed, scientific notation when the exponent is below -4 or at least
/// `precision`.
pub fn format_g(x: f64, precision: usize) -> String {
    let p = precision.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    // Rounding to `p` digits first fixes the exponent, as C does.
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes one sample per line after a `# fs=<value>` header.
pub fn write_signal_csv(path: &Path, x: &Signal) -> Result<()> {
    let mut out = format!("# fs={}\n", x.fs());
    for v in x.samples() {
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads the format of [`write_signal_csv`]. The header is optional
/// (`fs = 1`); blank lines are skipped.
pub fn read_signal_csv(path: &Path) -> Result<Signal> {
    let file = fs::File::open(path)?;
    let mut fs_value = 1.0;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("fs=") {
                fs_value = v.trim().parse().map_err(|_| {
                    Error::Parse(format!("line {}: bad sampling rate {v:?}", i + 1))
                })?;
            }
            continue;
        }
        samples.push(
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {}: not a number: {t:?}", i + 1)))?,
        );
    }
    Signal::new(samples, fs_value)
}

/// 16-bit PCM mono; samples are clipped to `[-1, 1]`.
pub fn write_wav(path: &Path, x: &Signal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: x.fs().round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &v in x.samples() {
        w.write_sample((v.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16)?;
    }
    w.finalize()?;
    Ok(())
}

/// Reads 16-bit PCM mono, scaled to `[-1, 1)`.
pub fn read_wav(path: &Path) -> Result<Signal> {
    let mut r = hound::WavReader::open(path)?;
    let spec = r.spec();
    if spec.channels != 1
        || spec.bits_per_sample != 16
        || spec.sample_format != hound::SampleFormat::Int
    {
        return Err(Error::Parse(format!(
            "expected 16-bit PCM mono, got {} channel(s), {} bits",
            spec.channels, spec.bits_per_sample
        )));
    }
    let samples = r
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Signal::new(samples, spec.sample_rate as f64)
}

/// Signal input by extension: `.wav` or anything else as CSV.
pub fn read_signal(path: &Path) -> Result<Signal> {
    let is_wav = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    if is_wav {
        read_wav(path)
    } else {
        read_signal_csv(path)
    }
}

/// One row per frequency bin (ascending), one column per time sample,
/// values as `%.9g`.
pub fn matrix_csv<T>(grid: &Grid<T>, mut fmt: impl FnMut(&T) -> String) -> String {
    let mut out = String::new();
    for row in grid.rows() {
        let cells: Vec<String> = row.map(&mut fmt).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, grid: &Grid<f64>) -> Result<()> {
    fs::write(path, matrix_csv(grid, |v| format_g(*v, 9)))?;
    Ok(())
}

pub fn write_counts_csv(path: &Path, grid: &Grid<u32>) -> Result<()> {
    fs::write(path, matrix_csv(grid, |v| v.to_string()))?;
    Ok(())
}

pub fn write_mask_csv(path: &Path, mask: &Mask) -> Result<()> {
    fs::write(
        path,
        matrix_csv(mask, |&b| if b { "1" } else { "0" }.to_string()),
    )?;
    Ok(())
}

/// Parses a matrix written by [`matrix_csv`] (any numeric cells).
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {}: bad cell {c:?}", i + 1)))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub n: usize,
    pub q: usize,
    pub density: f64,
    /// `null` when the histogram ball is empty.
    pub entropy: Option<f64>,
    pub label: ZeroKind,
    /// No histogram count within the ball; such zeros are not clustered.
    pub empty_ball: bool,
}

pub fn zero_records(c: &Classification) -> Vec<ZeroRecord> {
    c.zeros
        .coords
        .iter()
        .enumerate()
        .map(|(i, z)| ZeroRecord {
            n: z.n,
            q: z.q,
            density: c.features.density[i],
            entropy: c.features.entropy[i],
            label: c.labels[i],
            empty_ball: c.features.entropy[i].is_none(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub k: usize,
    pub log_w: f64,
    pub gap: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub k: usize,
    /// Centroids in z-scored `[density, entropy]`.
    pub centroids: Vec<[f64; 2]>,
    pub cluster_kinds: Vec<ZeroKind>,
    pub cluster_sizes: Vec<usize>,
    pub tie_broken: bool,
    pub gap: Vec<GapRecord>,
    pub noise_std: f64,
    pub gamma_noise_sq: f64,
    pub realizations: usize,
    pub radius: f64,
    /// Zeros left out of clustering because their ball was empty.
    pub empty_ball: usize,
    pub seed: u64,
    pub window_width: f64,
    pub n_fft: usize,
}

pub fn cluster_summary(c: &Classification, cfg: &ClassifierConfig) -> ClusterSummary {
    ClusterSummary {
        k: c.k(),
        centroids: c.model.centroids.clone(),
        cluster_kinds: c.cluster_labels.cluster_kinds.clone(),
        cluster_sizes: c.model.cluster_sizes(),
        tie_broken: c.cluster_labels.tie_broken,
        gap: c
            .gap
            .values
            .iter()
            .map(|g| GapRecord {
                k: g.k,
                log_w: g.log_w,
                gap: g.gap,
                s: g.s,
            })
            .collect(),
        noise_std: c.noise_std,
        gamma_noise_sq: c.histogram.gamma_noise_sq,
        realizations: c.histogram.realizations,
        radius: c.features.radius,
        empty_ball: c.empty_ball().iter().filter(|&&e| e).count(),
        seed: cfg.seed,
        window_width: cfg.stft.window_width,
        n_fft: c.spectrogram.n_fft,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleRecord {
    /// Grid positions `[n, q]` of the three vertices.
    pub vertices: [[usize; 2]; 3],
    /// The same vertices as `[n / T, q T / N]`.
    pub normalized: [[f64; 2]; 3],
    pub longest_edge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleFile {
    pub window_width: f64,
    pub n_fft: usize,
    /// Samples of padding before the input on the time axis of `vertices`.
    pub time_offset: usize,
    pub triangles: Vec<TriangleRecord>,
}

pub fn triangle_file(
    ts: &TriangleSet,
    window_width: f64,
    n_fft: usize,
    time_offset: usize,
) -> TriangleFile {
    TriangleFile {
        window_width,
        n_fft,
        time_offset,
        triangles: ts
            .triangles
            .iter()
            .enumerate()
            .map(|(t, tri)| TriangleRecord {
                vertices: tri.map(|v| [ts.vertices[v].n, ts.vertices[v].q]),
                normalized: tri.map(|v| ts.points[v]),
                longest_edge: ts.longest_edge(t),
            })
            .collect(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333333"),
            (999999999.5, "1e+09"),
            (6.02214076e23, "6.02214076e+23"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g(x, 9), want, "{x}");
        }
    }

    #[test]
    fn signal_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let x = Signal::new(vec![0.1, -2.0, 1e-17, 3.5], 8000.0).unwrap();
        write_signal_csv(&p, &x).unwrap();
        let y = read_signal_csv(&p).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn csv_errors_are_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "# fs=1\n1.0\nabc\n").unwrap();
        assert!(matches!(read_signal_csv(&p), Err(Error::Parse(_))));
        assert!(matches!(
            read_signal_csv(&dir.path().join("none.csv")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn wav_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let x = Signal::new(vec![0.0, 0.5, -0.5, 0.999, -1.0], 16000.0).unwrap();
        write_wav(&p, &x).unwrap();
        let y = read_signal(&p).unwrap();
        assert_eq!(y.fs(), 16000.0);
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn matrix_rows_are_frequencies() {
        let g = Grid::from_fn(2, 3, |q, n| (10 * q + n) as f64);
        assert_eq!(matrix_csv(&g, |v| format_g(*v, 9)), "0,1,2\n10,11,12\n");
    }
}
