// Radiometer precision and recall against in-band SNR on oversampled QPSK
// scenes, at reduced scale.

use wbsr::harness::{run_sweep, SweepSpec};

pub fn run_example() -> wbsr::Result<()> {
    let spec = SweepSpec {
        snr_points_db: vec![-10.0, 0.0, 10.0, 20.0, 30.0],
        repeats: 1,
        record_length: 1 << 19,
        bursts_per_record: 4,
        ..Default::default()
    };
    let out = run_sweep(&spec)?;
    println!("burst bandwidth {:.3}, {} bursts per record", out.bandwidth, spec.bursts_per_record);
    for (snr, sigma) in &out.sigmas {
        println!("  {snr:>+5} dB  sigma {sigma:.4e}");
    }
    print!("{}", out.report.to_csv());
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
