//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for unreadable input or invalid parameters,
//! 3 when the histogram is degenerate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tfzeros::classify::{classify_zeros, ClassifierConfig};
use tfzeros::experiments::{
    accuracy_sweep, detection_experiment, qrf_comparison, DetectionConfig, QrfConfig, SweepConfig,
};
use tfzeros::io;
use tfzeros::signals::{
    linear_chirp, mix_at_snr, triple_tone, white_gaussian_noise, NoiseSpec, Signal, ToneTriplet,
};
use tfzeros::tf::StftConfig;
use tfzeros::tf_filter::{denoise, qrf, DenoiseConfig, DenoiseMethod};
use tfzeros::{Error, Result};

#[derive(Parser)]
#[command(
    name = "tfzeros",
    version,
    about = "Spectrogram zeros: classification and denoising"
)]
struct Cli {
    /// Output directory (created if missing).
    #[arg(
        short = 'o',
        long = "out",
        global = true,
        env = "TFZEROS_OUT_DIR",
        default_value = "."
    )]
    out: PathBuf,
    /// Worker threads for the histogram and experiment loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test signal.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Classify the zeros of a signal's spectrogram.
    Classify(AnalysisArgs),
    /// Estimate the signal from selected Delaunay triangles of the zeros.
    Denoise(DenoiseArgs),
    /// Monte-Carlo experiments.
    Experiment {
        #[command(subcommand)]
        name: ExperimentKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Wav,
}

#[derive(Args)]
struct SynthCommon {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    fs: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum SynthKind {
    /// Three equispaced tones, optionally in white noise.
    TripleTone {
        #[arg(long, default_value_t = 0.25)]
        f2: f64,
        #[arg(long, default_value_t = 3.0)]
        theta: f64,
        #[arg(long = "T", default_value_t = 32.0)]
        window_width: f64,
        /// SNR in dB; without it the signal is noiseless.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[command(flatten)]
        common: SynthCommon,
    },
    /// White Gaussian noise.
    Noise {
        #[arg(long, default_value_t = 1.0)]
        var: f64,
        #[command(flatten)]
        common: SynthCommon,
    },
    /// Unit-amplitude linear chirp, optionally in white noise.
    Chirp {
        #[arg(long, default_value_t = 0.1)]
        f0: f64,
        #[arg(long, default_value_t = 0.3)]
        f1: f64,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[command(flatten)]
        common: SynthCommon,
    },
}

#[derive(Args)]
struct AnalysisArgs {
    /// Signal file (`.wav` for 16-bit PCM mono, anything else as CSV).
    #[arg(short, long)]
    input: PathBuf,
    /// Window width in samples.
    #[arg(long = "T", default_value_t = 32.0)]
    window_width: f64,
    #[arg(long)]
    n_fft: Option<usize>,
    /// Ball radius in grid cells (default `3T/8`).
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    /// Noise realizations in the histogram.
    #[arg(long = "J", default_value_t = 512)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Variance of the added noise (default: squared MAD estimate).
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Classified,
    Edge,
    Identity,
}

#[derive(Args)]
struct DenoiseArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Classified)]
    method: MethodArg,
    /// Edge threshold of `--method edge`, in units of `T`.
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    lmax: f64,
    /// Clean signal; when given, the quality factor goes to qrf.txt.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Mask dilation radius in cells.
    #[arg(long, default_value_t = 0)]
    dilation: usize,
    /// Noise padding at each end in samples (default `2⌈T⌉`).
    #[arg(long)]
    pad: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum ExperimentKind {
    /// Classification accuracy over J, r and SNR.
    Sweep {
        /// J = 512, SNR 10/20/30 dB, 20 repetitions.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        snrs: Option<Vec<f64>>,
        #[arg(long = "J", value_delimiter = ',')]
        j_values: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Chirp detection by cluster count.
    Detect {
        /// Signals per condition.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        snrs: Option<Vec<f64>>,
        #[arg(long = "J")]
        realizations: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Denoising quality of the classified and edge-length methods.
    Qrf {
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        snrs: Option<Vec<f64>>,
        #[arg(long = "J")]
        realizations: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::DegenerateHistogram => {
                    eprintln!(
                        "hint: raise --J or --gamma, or check that the input is not constant"
                    );
                    ExitCode::from(3)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Synth { kind } => synth(kind, out),
        Command::Classify(a) => classify(&a, out),
        Command::Denoise(a) => denoise_cmd(&a, out),
        Command::Experiment { name } => experiment(name, out),
    }
}

fn write_signal(out: &Path, stem: &str, format: Format, x: &Signal) -> Result<()> {
    match format {
        Format::Csv => io::write_signal_csv(&out.join(format!("{stem}.csv")), x),
        Format::Wav => io::write_wav(&out.join(format!("{stem}.wav")), x),
    }
}

fn add_noise(x: &Signal, snr: Option<f64>, seed: u64) -> Result<(Signal, Option<f64>)> {
    match snr {
        None => Ok((x.clone(), None)),
        Some(snr) => {
            let noise = white_gaussian_noise(x.len(), NoiseSpec::new(1.0, seed, 0))?;
            let noise = Signal::new(noise.into_samples(), x.fs())?;
            let m = mix_at_snr(x, &noise, snr)?;
            Ok((m.mixture, Some(m.noise_std * m.noise_std)))
        }
    }
}

fn synth(kind: SynthKind, out: &Path) -> Result<()> {
    match kind {
        SynthKind::TripleTone {
            f2,
            theta,
            window_width,
            snr,
            common,
        } => {
            let spec = ToneTriplet::new(f2, theta, window_width);
            let clean = triple_tone(&spec, common.n, common.fs)?;
            let (y, noise_var) = add_noise(&clean, snr, common.seed)?;
            write_signal(out, "signal", common.format, &y)?;
            if snr.is_some() {
                write_signal(out, "clean", common.format, &clean)?;
            }
            let meta = json!({
                "kind": "triple-tone",
                "n": common.n,
                "fs": common.fs,
                "seed": common.seed,
                "f2": f2,
                "theta": theta,
                "window_width": window_width,
                "frequencies": spec.frequencies(common.fs),
                "midpoints": spec.midpoints(common.fs),
                "zero_times": spec.zero_times(common.n, common.fs),
                "snr_db": snr,
                "noise_variance": noise_var,
            });
            io::write_json(&out.join("meta.json"), &meta)
        }
        SynthKind::Noise { var, common } => {
            let y = white_gaussian_noise(common.n, NoiseSpec::new(var, common.seed, 0))?;
            let y = Signal::new(y.into_samples(), common.fs)?;
            write_signal(out, "noise", common.format, &y)?;
            let meta = json!({
                "kind": "noise",
                "n": common.n,
                "fs": common.fs,
                "seed": common.seed,
                "frequencies": [],
                "snr_db": null,
                "noise_variance": var,
            });
            io::write_json(&out.join("meta.json"), &meta)
        }
        SynthKind::Chirp {
            f0,
            f1,
            snr,
            common,
        } => {
            let clean = linear_chirp(f0, f1, common.n, common.fs)?;
            let (y, noise_var) = add_noise(&clean, snr, common.seed)?;
            write_signal(out, "chirp", common.format, &y)?;
            if snr.is_some() {
                write_signal(out, "clean", common.format, &clean)?;
            }
            let meta = json!({
                "kind": "chirp",
                "n": common.n,
                "fs": common.fs,
                "seed": common.seed,
                "frequencies": [f0, f1],
                "snr_db": snr,
                "noise_variance": noise_var,
            });
            io::write_json(&out.join("meta.json"), &meta)
        }
    }
}

fn read_input(path: &Path) -> Result<Signal> {
    io::read_signal(path).map_err(|e| match e {
        Error::Io(e) => Error::Parse(format!("{}: {e}", path.display())),
        e => e,
    })
}

fn classifier_config(a: &AnalysisArgs) -> Result<ClassifierConfig> {
    if !(a.window_width >= 4.0) {
        return Err(Error::InvalidArgument(format!(
            "--T must be at least 4, got {}",
            a.window_width
        )));
    }
    if let Some(r) = a.r {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "--r must be positive, got {r}"
            )));
        }
    }
    if a.realizations < 1 {
        return Err(Error::InvalidArgument("--J must be at least 1".into()));
    }
    let mut stft = StftConfig::new(a.window_width);
    stft.n_fft = a.n_fft;
    let mut cfg = ClassifierConfig::new(a.window_width);
    cfg.stft = stft;
    cfg.radius = a.r;
    cfg.realizations = a.realizations;
    cfg.seed = a.seed;
    cfg.gamma_noise_sq = a.gamma;
    Ok(cfg)
}

fn classify(a: &AnalysisArgs, out: &Path) -> Result<()> {
    let cfg = classifier_config(a)?;
    let y = read_input(&a.input)?;
    let c = classify_zeros(&y, &cfg)?;
    io::write_json(&out.join("zeros.json"), &io::zero_records(&c))?;
    io::write_counts_csv(&out.join("histogram.csv"), &c.histogram.counts)?;
    io::write_matrix_csv(&out.join("spectrogram.csv"), &c.spectrogram.values)?;
    io::write_json(&out.join("cluster.json"), &io::cluster_summary(&c, &cfg))
}

fn denoise_cmd(a: &DenoiseArgs, out: &Path) -> Result<()> {
    let ccfg = classifier_config(&a.analysis)?;
    let method = match a.method {
        MethodArg::Classified => DenoiseMethod::Classified,
        MethodArg::Edge => DenoiseMethod::EdgeLength { l_max: a.lmax },
        MethodArg::Identity => DenoiseMethod::Identity,
    };
    let mut cfg = DenoiseConfig::new(ccfg);
    cfg.dilation = a.dilation;
    cfg.border_pad = a.pad;
    let y = read_input(&a.analysis.input)?;
    let reference = a.reference.as_deref().map(read_input).transpose()?;
    let d = denoise(&y, method, &cfg)?;
    if let Some(w) = &d.warning {
        eprintln!("warning: {w}");
    }
    write_signal(out, "denoised", a.format, &d.signal)?;
    io::write_mask_csv(&out.join("mask.csv"), &d.mask)?;
    let n_fft = ccfg.stft.plan()?.n_fft();
    let tri = io::triangle_file(&d.selected, ccfg.stft.window_width, n_fft, d.pad);
    io::write_json(&out.join("triangles.json"), &tri)?;
    if let Some(x) = reference {
        let value = qrf(&x, &d.signal)?;
        std::fs::write(out.join("qrf.txt"), format!("{}\n", io::format_g(value, 9)))?;
    }
    Ok(())
}

fn experiment(name: ExperimentKind, out: &Path) -> Result<()> {
    match name {
        ExperimentKind::Sweep {
            quick,
            reps,
            snrs,
            j_values,
            seed,
        } => {
            let mut cfg = if quick {
                SweepConfig::quick()
            } else {
                SweepConfig::default()
            };
            cfg.seed = seed;
            if let Some(r) = reps {
                cfg.repetitions = r;
            }
            if let Some(s) = snrs {
                cfg.snr_values = s;
            }
            if let Some(j) = j_values {
                cfg.j_values = j;
            }
            let report = accuracy_sweep(&cfg)?;
            std::fs::write(out.join("sweep.csv"), report.to_csv())?;
            io::write_json(&out.join("sweep.json"), &report)
        }
        ExperimentKind::Detect {
            reps,
            snrs,
            realizations,
            seed,
        } => {
            let mut cfg = DetectionConfig {
                seed,
                ..DetectionConfig::default()
            };
            if let Some(r) = reps {
                cfg.n_signals = r;
            }
            if let Some(s) = snrs {
                cfg.snr_values = s;
            }
            if let Some(j) = realizations {
                cfg.realizations = j;
            }
            let report = detection_experiment(&cfg)?;
            std::fs::write(out.join("detect.csv"), report.to_csv())?;
            io::write_json(&out.join("detect.json"), &report)
        }
        ExperimentKind::Qrf {
            reps,
            snrs,
            realizations,
            seed,
        } => {
            let mut cfg = QrfConfig {
                seed,
                ..QrfConfig::default()
            };
            if let Some(r) = reps {
                cfg.repetitions = r;
            }
            if let Some(s) = snrs {
                cfg.snr_values = s;
            }
            if let Some(j) = realizations {
                cfg.realizations = j;
            }
            let report = qrf_comparison(&cfg)?;
            std::fs::write(out.join("qrf.csv"), report.table_csv())?;
            io::write_json(&out.join("qrf.json"), &report)
        }
    }
}
