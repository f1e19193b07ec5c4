// IoU matching and precision / recall / F1 over the COCO threshold range.

use wbsr::detect::Detection;
use wbsr::grid::TimeFreqBox;
use wbsr::metrics::{self, Truth};

pub fn run_example() -> wbsr::Result<()> {
    let truths = vec![
        Truth { bbox: TimeFreqBox::new(0.0, 10_000.0, -0.20, -0.10)?, label: "PSK4".into() },
        Truth { bbox: TimeFreqBox::new(5_000.0, 20_000.0, 0.05, 0.08)?, label: "GMSK".into() },
        Truth { bbox: TimeFreqBox::new(30_000.0, 31_000.0, 0.30, 0.45)?, label: "OFDM512".into() },
    ];
    let dets = vec![
        // Tight, loose, and spurious.
        Detection::new(TimeFreqBox::new(0.0, 10_240.0, -0.201, -0.098)?, 3.1),
        Detection::new(TimeFreqBox::new(4_000.0, 22_000.0, 0.045, 0.085)?, 2.4),
        Detection::new(TimeFreqBox::new(40_000.0, 41_000.0, -0.40, -0.39)?, 1.2),
    ];
    for d in &dets {
        let ious: Vec<String> = truths.iter().map(|t| format!("{:.3}", metrics::iou(&d.bbox, &t.bbox))).collect();
        println!("detection IoUs against truths: [{}]", ious.join(", "));
    }
    let report = metrics::sweep_score(&dets, &truths, &metrics::coco_thresholds(), false)?;
    print!("{}", report.to_csv());
    println!(
        "mean over thresholds: precision {:.3} recall {:.3} F1 {:.3}",
        report.mean_precision, report.mean_recall, report.mean_f1
    );
    Ok(())
}

fn main() -> wbsr::Result<()> {
    run_example()
}
