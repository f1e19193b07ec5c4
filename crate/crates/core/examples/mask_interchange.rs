// A per-cell mask from an external recognizer, passed through the mask
// interchange file and clustered into scored detections.

use wbsr::detect::{self, DetectorConfig};
use wbsr::grid::{self, rasterize};
use wbsr::profile::builtin_profile;
use wbsr::{dsp, generate_scene, Rng};

pub fn run_example() -> wbsr::Result<()> {
    let dir = tempfile::tempdir()?;
    let scene = generate_scene(&builtin_profile("satcom-narrow").expect("built-in profile"), 1 << 18, 9)?;
    let noisy = dsp::add_awgn(&scene.samples, 1e-3, &mut Rng::new(2))?;
    let g = grid::spectrogram(&noisy, 512)?;

    // Stand-in for a learned model: the rasterized truth itself.
    let boxes: Vec<_> = scene.truths().into_iter().map(|t| t.bbox).collect();
    let mask = rasterize(&boxes, g.geometry());
    let path = dir.path().join("scene.mask");
    grid::write_mask(&path, &mask, serde_json::json!({"model": "oracle", "seed": 9}))?;
    let bytes = std::fs::metadata(&path)?.len();

    let (back, trailer) = grid::read_mask(&path)?;
    println!(
        "mask {}x{} ({} set cells), {bytes} bytes, provenance {}",
        trailer.geometry.frames,
        trailer.geometry.bins,
        back.count(),
        trailer.provenance
    );
    let dets = detect::detections_from_mask(&back, Some(&g), &DetectorConfig::default())?;
    let show = |b: &wbsr::TimeFreqBox| format!("{:>7.0}..{:<7.0} {:+.4}..{:+.4}", b.t_start(), b.t_end(), b.f_low(), b.f_high());
    for b in &boxes {
        println!("  truth     {}", show(b));
    }
    for d in &dets {
        println!("  detection {}  score {:.2}", show(&d.bbox), d.score);
    }
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
