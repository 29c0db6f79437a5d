// Writes and reads back the signal, matrix and JSON formats.

use tfzeros::classify::{classify_zeros, ClassifierConfig};
use tfzeros::io;
use tfzeros::signals::{linear_chirp, mix_at_snr, white_gaussian_noise, NoiseSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("tfzeros-formats-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let x = linear_chirp(0.1, 0.3, 256, 1.0)?;
    let noise = white_gaussian_noise(256, NoiseSpec::new(1.0, 1, 0))?;
    let y = mix_at_snr(&x, &noise, 10.0)?.mixture.scaled(0.25);

    io::write_signal_csv(&dir.join("chirp.csv"), &y)?;
    io::write_wav(&dir.join("chirp.wav"), &y)?;
    let from_csv = io::read_signal(&dir.join("chirp.csv"))?;
    let from_wav = io::read_signal(&dir.join("chirp.wav"))?;
    assert_eq!(from_csv, y);
    let worst = y
        .samples()
        .iter()
        .zip(from_wav.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("CSV is exact, WAV differs by at most {worst:.1e}");

    let mut cfg = ClassifierConfig::new(32.0);
    cfg.realizations = 64;
    let c = classify_zeros(&from_csv, &cfg)?;
    io::write_json(&dir.join("zeros.json"), &io::zero_records(&c))?;
    io::write_json(&dir.join("cluster.json"), &io::cluster_summary(&c, &cfg))?;
    io::write_matrix_csv(&dir.join("spectrogram.csv"), &c.spectrogram.values)?;
    let m = io::read_matrix_csv(&dir.join("spectrogram.csv"))?;
    println!("spectrogram.csv: {} rows of {} values", m.len(), m[0].len());
    println!("%.9g of pi: {}", io::format_g(std::f64::consts::PI, 9));

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
