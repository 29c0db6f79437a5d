// Detection of a chirp in noise by the number of zero clusters, on a
// handful of signals. With few realizations the histogram of pure noise is
// itself lumpy and splits into clusters; from J = 512 on it rarely does.

use tfzeros::experiments::{detection_experiment, DetectionConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = DetectionConfig {
        n_signals: 4,
        snr_values: vec![10.0],
        realizations: 512,
        seed: 2,
        ..DetectionConfig::default()
    };
    let report = detection_experiment(&cfg)?;
    println!("T = {:.2}, N = {}", report.window_width, report.n_fft);
    print!("{}", report.to_csv());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
