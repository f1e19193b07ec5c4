// Generate a small labelled dataset of SigMF records from two band layout
// profiles and list what was written.

use wbsr::harness::{self, GenerateOptions};
use wbsr::profile::builtin_profile;
use wbsr::sigmf;

pub fn run_example() -> wbsr::Result<()> {
    let dir = tempfile::tempdir()?;
    let profiles = ["ism-burst", "cellular-uplink"].map(|p| builtin_profile(p).expect("built-in profile"));
    let opts = GenerateOptions {
        count: 4,
        seed: 42,
        record_length: 1 << 18,
        ..Default::default()
    };
    let manifest = harness::cmd_generate(&profiles, &opts, dir.path())?;
    for entry in &manifest.records {
        let rec = sigmf::read_record(&dir.path().join(&entry.name))?;
        println!("{} ({}, seed {:#018x}): {} bursts", entry.name, entry.profile, entry.seed, rec.truths.len());
        for t in rec.truths.iter().take(3) {
            println!(
                "    {:<7} samples {:>7.0}..{:<7.0} freq {:+.4}..{:+.4}",
                t.label,
                t.bbox.t_start(),
                t.bbox.t_end(),
                t.bbox.f_low(),
                t.bbox.f_high()
            );
        }
    }
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
