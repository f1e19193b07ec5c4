// Root-raised-cosine design and the polyphase resampler that places
// canonical-rate bursts at their target bandwidth.

use std::f64::consts::PI;

use num_complex::Complex64;
use wbsr::dsp::{self, ComplexBuffer};
use wbsr::modulation::rrc_span;

fn peak_frequency(x: &[Complex64], n: usize) -> wbsr::Result<f64> {
    let frame = &dsp::dft(&ComplexBuffer::new(x[..n].to_vec(), 1.0)?, n)?[0];
    let k = (0..n).max_by(|&a, &b| frame[a].norm().total_cmp(&frame[b].norm())).unwrap_or(0);
    Ok(-0.5 + k as f64 / n as f64)
}

pub fn run_example() -> wbsr::Result<()> {
    println!("RRC matched pair, 2 samples per symbol:");
    for beta in [0.1, 0.35, 1.0] {
        let taps = dsp::design_rrc(beta, 2, rrc_span(beta))?;
        let rc = dsp::convolve_real(&taps.taps, &taps.taps);
        let c = 2 * taps.delay;
        let isi = (1..c / 2).map(|m| rc[c + 2 * m].abs() / rc[c]).fold(0.0, f64::max);
        println!("  beta {beta:<4} {:>4} taps, worst ISI {isi:.1e} of peak", taps.taps.len());
    }

    println!("tone at 0.2 cycles/sample through the resampler:");
    let tone: Vec<Complex64> = (0..20_000).map(|n| Complex64::from_polar(1.0, 2.0 * PI * 0.2 * n as f64)).collect();
    let x = ComplexBuffer::new(tone, 1.0)?;
    for ratio in [0.5, 2.0, 3.7, 100.0] {
        let y = dsp::resample_chain(&x, ratio)?;
        let mid = &y.samples()[y.len() / 2 - 2048..];
        println!(
            "  ratio {ratio:>5}: {} -> {} samples, tone at {:+.5} (expected {:+.5})",
            x.len(),
            y.len(),
            peak_frequency(mid, 4096)?,
            0.2 / ratio
        );
    }
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
