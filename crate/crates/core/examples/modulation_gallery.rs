// Every modulation class at its canonical rate: power, occupied band and
// peak-to-average ratio.

use wbsr::dsp;
use wbsr::modulation::{self, BurstSpec};
use wbsr::ModulationClass;

pub fn run_example() -> wbsr::Result<()> {
    println!("{:<8} {:>7} {:>17} {:>17} {:>8}", "class", "power", "canonical band", "99% band", "PAPR dB");
    for class in ModulationClass::ALL {
        let beta = 0.35;
        let y = modulation::modulate(&BurstSpec::new(class, 1 << 16, beta, 7))?;
        let power = y.mean_power();
        let peak = y.samples().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let (lo, hi) = class.canonical_band(beta);
        let (olo, ohi) = dsp::occupied_band(y.samples(), 0.99, 1024);
        println!(
            "{:<8} {power:>7.4} [{lo:>+6.3}, {hi:>+6.3}] [{olo:>+6.3}, {ohi:>+6.3}] {:>8.2}",
            class.name(),
            10.0 * (peak / power).log10()
        );
    }
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
