// A small accuracy sweep over the ball radius.

use tfzeros::experiments::{accuracy_sweep, SweepConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SweepConfig {
        j_values: vec![128],
        snr_values: vec![20.0],
        repetitions: 3,
        seed: 4,
        ..SweepConfig::default()
    };
    let report = accuracy_sweep(&cfg)?;
    for c in &report.cells {
        println!(
            "r = {:.3} T: median accuracy {:.3} [{:.3}, {:.3}]",
            c.r_factor, c.median, c.q25, c.q75
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
