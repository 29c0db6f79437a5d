// Denoising a three-tone signal with classified zeros and with an
// edge-length threshold, scored by the quality factor.

use tfzeros::classify::ClassifierConfig;
use tfzeros::experiments::experiment_stft;
use tfzeros::signals::{mix_at_snr, triple_tone, white_gaussian_noise, NoiseSpec, ToneTriplet};
use tfzeros::tf_filter::{denoise, longest_edge_bound, qrf, DenoiseConfig, DenoiseMethod};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let stft = experiment_stft(256);
    let t = stft.window_width;
    let x = triple_tone(&ToneTriplet::new(0.25, 3.0, t), 256, 1.0)?;
    let noise = white_gaussian_noise(256, NoiseSpec::new(1.0, 9, 0))?;
    let y = mix_at_snr(&x, &noise, 20.0)?;

    let mut classifier = ClassifierConfig::new(t);
    classifier.stft = stft;
    classifier.realizations = 256;
    let cfg = DenoiseConfig::new(classifier);

    println!("edge bound for theta = 3: {:.4}", longest_edge_bound(3.0)?);
    println!("input QRF {:.2} dB", qrf(&x, &y.mixture)?);
    for method in [
        DenoiseMethod::Classified,
        DenoiseMethod::EdgeLength { l_max: 1.3 },
        DenoiseMethod::EdgeLength { l_max: 1.5 },
    ] {
        let d = denoise(&y.mixture, method, &cfg)?;
        println!(
            "{:<40} QRF {:6.2} dB, {} of {} triangles",
            format!("{method:?}"),
            qrf(&x, &d.signal)?,
            d.selected.len(),
            d.triangles.len()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
