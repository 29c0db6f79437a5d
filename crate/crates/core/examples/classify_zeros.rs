// Classifies the zeros of a noisy three-tone signal and scores the labels
// against the geometric reference.

use tfzeros::classify::ground_truth::{accuracy, GroundTruth, DEFAULT_BAND};
use tfzeros::classify::{classify_zeros, ClassifierConfig, ZeroKind};
use tfzeros::signals::{mix_at_snr, triple_tone, white_gaussian_noise, NoiseSpec, ToneTriplet};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToneTriplet::new(0.25, 3.0, 32.0);
    let x = triple_tone(&spec, 256, 1.0)?;
    let noise = white_gaussian_noise(256, NoiseSpec::new(1.0, 3, 0))?;
    let y = mix_at_snr(&x, &noise, 20.0)?;

    let mut cfg = ClassifierConfig::new(32.0);
    cfg.realizations = 256;
    cfg.seed = 5;
    let c = classify_zeros(&y.mixture, &cfg)?;
    println!("K = {} clusters, gap values:", c.k());
    for g in &c.gap.values {
        println!("  K = {}: gap {:.3} (s = {:.3})", g.k, g.gap, g.s);
    }
    for kind in [ZeroKind::First, ZeroKind::Second, ZeroKind::Third] {
        println!("{:>6}: {}", kind.as_str(), c.count(kind));
    }

    let plan = cfg.stft.plan()?;
    let truth = GroundTruth::triple_tone(
        &spec,
        &x,
        y.noise_std.powi(2),
        &plan,
        cfg.radius(),
        DEFAULT_BAND,
    )?;
    println!(
        "accuracy {:.3}",
        accuracy(&c.labels, &truth.labels(&c.zeros))
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
