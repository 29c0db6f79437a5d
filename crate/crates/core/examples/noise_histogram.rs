// Noise-assisted histogram of spectrogram zeros for a tone pair in noise.

use tfzeros::signals::{mix_at_snr, triple_tone, white_gaussian_noise, NoiseSpec, ToneTriplet};
use tfzeros::tf::StftConfig;
use tfzeros::zero_hist::{estimate_noise_std, zeros_histogram_snapshots};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let x = triple_tone(&ToneTriplet::new(0.25, 3.0, 32.0), 256, 1.0)?;
    let noise = white_gaussian_noise(256, NoiseSpec::new(1.0, 7, 0))?;
    let y = mix_at_snr(&x, &noise, 20.0)?;

    let cfg = StftConfig::new(32.0);
    let sigma = estimate_noise_std(&cfg.plan()?.stft(&y.mixture));
    println!(
        "true noise std {:.4}, MAD estimate {:.4}",
        y.noise_std, sigma
    );

    let snapshots = zeros_histogram_snapshots(&y.mixture, &[16, 64, 256], sigma * sigma, 1, &cfg)?;
    for (j, h) in [16, 64, 256].iter().zip(&snapshots) {
        println!(
            "J = {j:3}: {} zeros counted, busiest cell {}",
            h.total(),
            h.max_count()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
