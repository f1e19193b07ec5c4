// Write a scene as a SigMF record, read it back and show the metadata.

use wbsr::profile::builtin_profile;
use wbsr::{generate_scene, sigmf};

pub fn run_example() -> wbsr::Result<()> {
    let dir = tempfile::tempdir()?;
    let scene = generate_scene(&builtin_profile("amateur-hf").expect("built-in profile"), 1 << 16, 5)?;
    let rec = sigmf::write_record(&scene, 100e6, &dir.path().join("hf"))?;
    let text = std::fs::read_to_string(&rec.meta_path)?;
    println!("{}", text.lines().take(40).collect::<Vec<_>>().join("\n"));

    let back = sigmf::read_record(&rec.data_path)?;
    let err = scene
        .samples
        .samples()
        .iter()
        .zip(back.samples.samples())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>();
    let sig = scene.samples.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
    println!(
        "{} samples, {} annotations, scale {:.3}, quantization SNR {:.1} dB",
        back.samples.len(),
        back.truths.len(),
        rec.meta.global.scale,
        10.0 * (sig / err).log10()
    );
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
