// Channelized radiometer on a noisy scene: detections against the truth
// boxes they match best.

use wbsr::detect::{channelized_radiometer, DetectorConfig};
use wbsr::dsp;
use wbsr::harness::sigma_for_snr;
use wbsr::metrics::iou;
use wbsr::profile::builtin_profile;
use wbsr::{generate_scene, Rng};

pub fn run_example() -> wbsr::Result<()> {
    let profile = builtin_profile("cellular-uplink").expect("built-in profile");
    let scene = generate_scene(&profile, 1 << 19, 3)?;
    // Noise 20 dB below the weakest burst, measured in its own band.
    let sigma = scene
        .bursts
        .iter()
        .map(|b| sigma_for_snr(b.amplitude.powi(2), b.bandwidth, 20.0))
        .fold(f64::INFINITY, f64::min);
    let noisy = dsp::add_awgn(&scene.samples, sigma, &mut Rng::new(1))?;
    let config = DetectorConfig::default();
    let dets = channelized_radiometer(&noisy, &config)?;
    let truths = scene.truths();
    println!("{} bursts, {} detections", truths.len(), dets.len());
    for d in &dets {
        let (best, label) = truths
            .iter()
            .map(|t| (iou(&d.bbox, &t.bbox), t.label.as_str()))
            .fold((0.0, "-"), |a, b| if b.0 > a.0 { b } else { a });
        println!(
            "  samples {:>8.0}..{:<8.0} freq {:+.4}..{:+.4}  score {:>5.2}  best IoU {best:.2} ({label})",
            d.bbox.t_start(),
            d.bbox.t_end(),
            d.bbox.f_low(),
            d.bbox.f_high(),
            d.score
        );
    }
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
