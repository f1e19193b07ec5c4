//! End-to-end commands: dataset generation, detection, scoring and SNR
//! sweeps. The `wbsr` binary is a thin argument parser over these.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{self, Detection, DetectorConfig};
use crate::dsp::{self, ComplexBuffer, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::grid::{self, SpectralGrid};
use crate::metrics::{self, ScoreAccumulator, ScoreReport};
use crate::modulation::{ModulationClass, LINEAR_SPS};
use crate::profile::BandLayoutProfile;
use crate::rng::{self, split_seed, Rng};
use crate::scene::{self, render_scene, SignalBurst};
use crate::sigmf;

pub const DEFAULT_RECORD_LENGTH: usize = 1 << 21;

/// Noise sigma giving `snr_db` of in-band SNR for a signal of mean power
/// `signal_power` occupying `bandwidth` (normalized) of the band.
///
/// In-band SNR is `10 log10(P / (sigma^2 * bandwidth))`: white noise of total
/// variance `sigma^2` puts `sigma^2 * bandwidth` into the signal's band.
pub fn sigma_for_snr(signal_power: f64, bandwidth: f64, snr_db: f64) -> f64 {
    (signal_power / (bandwidth * 10f64.powf(snr_db / 10.0))).sqrt()
}

pub fn in_band_snr_db(signal_power: f64, sigma: f64, bandwidth: f64) -> f64 {
    10.0 * (signal_power / (sigma * sigma * bandwidth)).log10()
}

/// Measured in-band SNR of `signal` against `noise`, both unmixed, over the
/// band `[f_low, f_high]`, from averaged periodograms.
pub fn measure_in_band_snr_db(signal: &[num_complex::Complex64], noise: &[num_complex::Complex64], f_low: f64, f_high: f64, nfft: usize) -> f64 {
    let band_power = |x: &[num_complex::Complex64]| {
        let spec = dsp::averaged_spectrum(x, nfft);
        let total: f64 = spec.iter().sum();
        let inside: f64 = spec
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = -0.5 + (*k as f64 + 0.5) / nfft as f64;
                f >= f_low && f <= f_high
            })
            .map(|(_, p)| p)
            .sum();
        dsp::mean_power(x) * inside / total
    };
    10.0 * (band_power(signal) / band_power(noise)).log10()
}

// ---------------------------------------------------------------- generate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub profile: String,
    pub seed: u64,
    pub bursts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub rng: String,
    pub record_length: usize,
    pub sample_rate: f64,
    pub records: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub count: usize,
    pub seed: u64,
    pub record_length: usize,
    pub sample_rate: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            count: 1,
            seed: 0,
            record_length: DEFAULT_RECORD_LENGTH,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Write `count` SigMF records to `out_dir`, cycling through `profiles`, plus
/// a manifest of per-record seeds. Output depends only on the inputs.
pub fn cmd_generate(profiles: &[BandLayoutProfile], opts: &GenerateOptions, out_dir: &Path) -> Result<Manifest> {
    if profiles.is_empty() {
        return Err(Error::param("no profiles given"));
    }
    if opts.record_length == 0 {
        return Err(Error::param("record length must be positive"));
    }
    for p in profiles {
        p.validate()?;
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::file(out_dir, e))?;
    let records = (0..opts.count)
        .into_par_iter()
        .map(|i| {
            let profile = &profiles[i % profiles.len()];
            let seed = split_seed(opts.seed, i as u64);
            let name = format!("record_{i:04}");
            let scene = scene::generate_scene(profile, opts.record_length, seed)?;
            sigmf::write_record(&scene, opts.sample_rate, &out_dir.join(&name))?;
            log::info!("{name}: profile {}, {} bursts", profile.name, scene.bursts.len());
            Ok(ManifestEntry {
                name,
                profile: profile.name.clone(),
                seed,
                bursts: scene.bursts.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        seed: opts.seed,
        rng: rng::ALGORITHM.into(),
        record_length: opts.record_length,
        sample_rate: opts.sample_rate,
        records,
    };
    let path = out_dir.join(MANIFEST_NAME);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::file(&path, e))?;
    Ok(manifest)
}

// ------------------------------------------------------------------ detect

/// Detect on a record with the radiometer, or cluster an external mask
/// when `mask` is given. Writes JSON-lines detections to `out`.
pub fn cmd_detect(record: &Path, config: &DetectorConfig, mask: Option<&Path>, out: &Path) -> Result<Vec<Detection>> {
    config.validate()?;
    let contents = sigmf::read_record(record)?;
    let grid = detect::detector_grid(&contents.samples, config)?;
    let dets = match mask {
        None => detect::radiometer_on_grid(&grid, config),
        Some(path) => {
            let (mask, _) = grid::read_mask(path)?;
            detect::detections_from_mask(&mask, Some(&grid), config)?
        }
    };
    detect::write_detections(out, &dets)?;
    Ok(dets)
}

// ------------------------------------------------------------------- score

/// Score a detections file against a record's annotations. Writes
/// `<out>.json` and `<out>.csv`.
pub fn cmd_score(detections: &Path, record: &Path, thresholds: &[f64], class_aware: bool, out: &Path) -> Result<ScoreReport> {
    let dets = detect::read_detections(detections)?;
    let truths = read_truths(record)?;
    let report = metrics::sweep_score(&dets, &truths, thresholds, class_aware)?;
    write_report(&report, out)?;
    Ok(report)
}

fn read_truths(record: &Path) -> Result<Vec<metrics::Truth>> {
    let (_, meta_path) = sigmf::record_paths(record);
    let meta = sigmf::read_metadata(&meta_path)?;
    let fs_hz = meta.global.sample_rate;
    meta.annotations
        .iter()
        .map(|a| {
            let t0 = a.sample_start as f64;
            let lo = (a.freq_lower_edge / fs_hz).clamp(-0.5, 0.5);
            let hi = (a.freq_upper_edge / fs_hz).clamp(-0.5, 0.5);
            Ok(metrics::Truth {
                bbox: grid::TimeFreqBox::new(t0, t0 + a.sample_count as f64, lo, hi)?,
                label: a.label.clone(),
            })
        })
        .collect()
}

pub fn write_report(report: &ScoreReport, out: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    let json = out.with_extension("json");
    let csv = out.with_extension("csv");
    fs::write(&json, serde_json::to_string_pretty(report)? + "\n").map_err(|e| Error::file(&json, e))?;
    fs::write(&csv, report.to_csv()).map_err(|e| Error::file(&csv, e))?;
    Ok((json, csv))
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSpec {
    pub snr_points_db: Vec<f64>,
    pub repeats: usize,
    /// Samples per symbol in the wideband record.
    pub oversampling: f64,
    pub modulation: ModulationClass,
    pub rrc_beta: f64,
    pub record_length: usize,
    pub bursts_per_record: usize,
    pub seed: u64,
    pub iou_thresholds: Vec<f64>,
    pub class_aware: bool,
    pub detector: DetectorConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            snr_points_db: (-4..=6).map(|i| (5 * i) as f64).collect(),
            repeats: 5,
            oversampling: 5.0,
            modulation: ModulationClass::Psk4,
            rrc_beta: 0.35,
            record_length: DEFAULT_RECORD_LENGTH,
            bursts_per_record: 8,
            seed: 0,
            iou_thresholds: vec![metrics::DEFAULT_IOU_THRESHOLD],
            class_aware: false,
            detector: DetectorConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let spec: SweepSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Normalized truth bandwidth of the swept bursts.
    pub fn bandwidth(&self) -> f64 {
        let (lo, hi) = self.modulation.canonical_band(self.rrc_beta);
        let sps = self.modulation.samples_per_symbol().unwrap_or(LINEAR_SPS) as f64;
        (hi - lo) * sps / self.oversampling
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if self.repeats < 1 {
            return Err(Error::param("repeats must be >= 1"));
        }
        if self.snr_points_db.is_empty() || self.snr_points_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("need at least one finite SNR point"));
        }
        if self.record_length < 10 * self.detector.fft_size {
            return Err(Error::param(format!(
                "record length {} below 10 x fft size {}",
                self.record_length, self.detector.fft_size
            )));
        }
        if self.bursts_per_record < 1 {
            return Err(Error::param("bursts_per_record must be >= 1"));
        }
        let bw = self.bandwidth();
        if !(bw > 0.0 && bw <= 1.0) {
            return Err(Error::param(format!(
                "oversampling {} gives bandwidth {bw} outside (0, 1]",
                self.oversampling
            )));
        }
        let slot = self.record_length / self.bursts_per_record;
        if (0.4 * slot as f64) * bw < scene::MIN_TIME_BANDWIDTH {
            return Err(Error::param("record too short for the requested bursts per record"));
        }
        Ok(())
    }

    /// Bursts of one repeat: one per equal time slot, each 40-80% of its slot
    /// long at a random position and center frequency, amplitude 1.
    pub fn layout(&self, repeat: usize) -> Vec<SignalBurst> {
        let seed = split_seed(self.seed, repeat as u64);
        let mut rng = Rng::new(seed);
        let bw = self.bandwidth();
        let slot = self.record_length / self.bursts_per_record;
        (0..self.bursts_per_record)
            .map(|i| {
                let dur = ((rng.random_range(0.4..0.8) * slot as f64) as usize).max(1);
                let start = i * slot + rng.random_range(0..=slot - dur);
                let half = bw / 2.0;
                let center = if half < 0.5 {
                    rng.random_range(-0.5 + half..=0.5 - half)
                } else {
                    0.0
                };
                SignalBurst {
                    label: self.modulation,
                    center_freq: center,
                    bandwidth: bw,
                    start_sample: start,
                    duration_samples: dur,
                    amplitude: 1.0,
                    rrc_beta: self.modulation.is_rrc_shaped().then_some(self.rrc_beta),
                    burst_seed: split_seed(seed, i as u64),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub report: ScoreReport,
    /// `(snr_db, sigma)` pairs actually used.
    pub sigmas: Vec<(f64, f64)>,
    pub bandwidth: f64,
}

/// Detect on noisy renderings of single-modulation scenes at each SNR point
/// and aggregate counts over repeats. Scenes are rendered once per repeat and
/// reused across SNR points; noise is drawn independently per point.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let bw = spec.bandwidth();
    let sigmas: Vec<(f64, f64)> = spec
        .snr_points_db
        .iter()
        .map(|&s| (s, sigma_for_snr(1.0, bw, s)))
        .collect();
    for (s, sigma) in &sigmas {
        log::info!("snr {s} dB: sigma {sigma:.6e}");
    }
    let mut total = ScoreAccumulator::new(spec.iou_thresholds.clone(), spec.class_aware)?;
    for repeat in 0..spec.repeats {
        let bursts = spec.layout(repeat);
        let clean = render_scene(&bursts, spec.record_length)?;
        let truths: Vec<_> = bursts.iter().map(scene::burst_truth).collect();
        let repeat_seed = split_seed(spec.seed, repeat as u64);
        let partial = sigmas
            .par_iter()
            .enumerate()
            .map(|(k, &(snr, sigma))| {
                let mut rng = Rng::new(split_seed(repeat_seed, 1 + k as u64));
                let noisy = dsp::add_awgn(&clean, sigma, &mut rng)?;
                let dets = detect_buffer(&noisy, &spec.detector)?;
                let mut acc = ScoreAccumulator::new(spec.iou_thresholds.clone(), spec.class_aware)?;
                acc.add(Some(snr), &dets, &truths)?;
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        for acc in partial {
            total.merge(acc);
        }
    }
    Ok(SweepOutput {
        report: total.report(),
        sigmas,
        bandwidth: bw,
    })
}

fn detect_buffer(buf: &ComplexBuffer, config: &DetectorConfig) -> Result<Vec<Detection>> {
    let grid: SpectralGrid = detect::detector_grid(buf, config)?;
    Ok(detect::radiometer_on_grid(&grid, config))
}

/// Run a sweep and write the CSV to `out` (and the full output as JSON
/// beside it).
pub fn cmd_sweep(spec: &SweepSpec, out: &Path) -> Result<SweepOutput> {
    let result = run_sweep(spec)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    fs::write(out, result.report.to_csv()).map_err(|e| Error::file(out, e))?;
    let json = out.with_extension("json");
    fs::write(&json, serde_json::to_string_pretty(&result)? + "\n").map_err(|e| Error::file(&json, e))?;
    Ok(result)
}
