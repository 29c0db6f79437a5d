// Zeros of the spectrogram of a noiseless three-tone signal, and a masked
// reconstruction from the STFT.

use tfzeros::signals::{triple_tone, ToneTriplet};
use tfzeros::tf::{find_zeros, reconstruct, Grid, StftConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ToneTriplet::new(0.25, 3.0, 32.0);
    let x = triple_tone(&spec, 256, 1.0)?;

    let cfg = StftConfig::new(32.0);
    let plan = cfg.plan()?;
    let v = plan.stft(&x);
    let s = tfzeros::tf::spectrogram(&v);
    let zeros = find_zeros(&s, cfg.resolved_margin(plan.n_fft()));
    println!(
        "T = {}, N = {}, grid {:?}, {} zeros",
        plan.window().width(),
        plan.n_fft(),
        s.shape(),
        zeros.len()
    );

    let [m1, m2] = spec.midpoints(1.0);
    println!(
        "midpoint bins: {:.2}, {:.2}",
        m1 * plan.n_fft() as f64,
        m2 * plan.n_fft() as f64
    );
    for z in zeros.coords.iter().take(6) {
        println!("  zero at n = {:3}, q = {:3}", z.n, z.q);
    }

    let (n_freq, n_time) = v.shape();
    let y = reconstruct(&v, &Grid::filled(n_freq, n_time, true))?;
    let err = x
        .samples()
        .iter()
        .zip(y.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("full-mask reconstruction error: {err:.2e}");
    assert!(err < 1e-8);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
