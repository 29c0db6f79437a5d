// Test signals: three tones, a chirp and white noise mixed at a given SNR.

use tfzeros::signals::{
    linear_chirp, mix_at_snr, snr_db, triple_tone, white_gaussian_noise, NoiseSpec, ToneTriplet,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToneTriplet::new(0.25, 3.0, 32.0);
    let tones = triple_tone(&spec, 256, 1.0)?;
    println!("tones at {:?} cycles/sample", spec.frequencies(1.0));
    println!("deterministic zeros at n = {:?}", spec.zero_times(256, 1.0));

    let chirp = linear_chirp(0.1, 0.3, 256, 1.0)?;
    let noise = white_gaussian_noise(256, NoiseSpec::new(1.0, 42, 0))?;
    for snr in [0.0, 10.0, 30.0] {
        let m = mix_at_snr(&chirp, &noise, snr)?;
        println!(
            "chirp at {snr:4} dB: noise std {:.4}, measured {:.2} dB",
            m.noise_std,
            snr_db(chirp.energy(), m.noise_energy)
        );
    }
    println!("tone energy {:.1}", tones.energy());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
