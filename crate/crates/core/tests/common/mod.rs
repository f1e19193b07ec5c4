//! Independent oracles shared by the integration tests and the acceptance
//! report. Nothing here calls into the code under test for the quantity it
//! checks.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use wbsr::detect::Connectivity;
use wbsr::dsp::{self, ComplexBuffer};
use wbsr::grid::{self, BinaryMask, TimeFreqBox, Window};
use wbsr::metrics::iou;
use wbsr::scene::{burst_to_box, render_burst, SignalBurst};
use wbsr::{ModulationClass, Rng};

/// O(n^2) DFT, unshifted.
pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * ((k * t) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

pub fn tone(freq: f64, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|n| Complex64::from_polar(1.0, 2.0 * PI * (freq * n as f64).fract()))
        .collect()
}

/// Index of the largest-magnitude element.
pub fn argmax(x: &[f64]) -> usize {
    x.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Cells of each component found by recursive flood fill, as sets, sorted
/// by their smallest cell.
pub fn flood_fill(mask: &[bool], frames: usize, bins: usize, eight: bool) -> Vec<BTreeSet<(usize, usize)>> {
    fn visit(
        mask: &[bool],
        seen: &mut [bool],
        frames: usize,
        bins: usize,
        eight: bool,
        t: usize,
        k: usize,
        out: &mut BTreeSet<(usize, usize)>,
    ) {
        let i = t * bins + k;
        if !mask[i] || seen[i] {
            return;
        }
        seen[i] = true;
        out.insert((t, k));
        for dt in -1i64..=1 {
            for dk in -1i64..=1 {
                if (dt == 0 && dk == 0) || (!eight && dt != 0 && dk != 0) {
                    continue;
                }
                let (nt, nk) = (t as i64 + dt, k as i64 + dk);
                if nt >= 0 && nk >= 0 && (nt as usize) < frames && (nk as usize) < bins {
                    visit(mask, seen, frames, bins, eight, nt as usize, nk as usize, out);
                }
            }
        }
    }
    let mut seen = vec![false; mask.len()];
    let mut comps = Vec::new();
    for t in 0..frames {
        for k in 0..bins {
            if mask[t * bins + k] && !seen[t * bins + k] {
                let mut c = BTreeSet::new();
                visit(mask, &mut seen, frames, bins, eight, t, k, &mut c);
                comps.push(c);
            }
        }
    }
    comps
}

pub fn connectivity_is_eight(c: Connectivity) -> bool {
    matches!(c, Connectivity::Eight)
}

/// Largest one-to-one matching over pairs with IoU >= `thr`, by exhaustive
/// search over assignments of truths to detections.
pub fn max_matching(ious: &[Vec<f64>], thr: f64) -> usize {
    fn go(ious: &[Vec<f64>], thr: f64, d: usize, used: &mut Vec<bool>) -> usize {
        if d == ious.len() {
            return 0;
        }
        let mut best = go(ious, thr, d + 1, used);
        for t in 0..used.len() {
            if !used[t] && ious[d][t] >= thr {
                used[t] = true;
                best = best.max(1 + go(ious, thr, d + 1, used));
                used[t] = false;
            }
        }
        best
    }
    let truths = ious.first().map_or(0, |r| r.len());
    go(ious, thr, 0, &mut vec![false; truths])
}

pub fn iou_matrix(dets: &[TimeFreqBox], truths: &[TimeFreqBox]) -> Vec<Vec<f64>> {
    dets.iter().map(|d| truths.iter().map(|t| iou(d, t)).collect()).collect()
}

/// Random box inside `[0, 100] x [-0.5, 0.5]`.
pub fn random_box(rng: &mut Rng) -> TimeFreqBox {
    use rand::Rng as _;
    let t0 = rng.random_range(0.0..90.0);
    let t1 = t0 + rng.random_range(1.0..30.0);
    let f0: f64 = rng.random_range(-0.5..0.4);
    let f1 = (f0 + rng.random_range(0.01..0.3)).min(0.5);
    TimeFreqBox::new(t0, t1, f0, f1).unwrap()
}

pub fn random_mask(rng: &mut Rng, frames: usize, bins: usize, density: f64) -> Vec<bool> {
    use rand::Rng as _;
    (0..frames * bins).map(|_| rng.random_bool(density)).collect()
}

/// Fraction of a burst's spectrogram energy falling in cells whose centers
/// lie inside its truth box. The burst is rendered alone at `snr_db` of
/// in-band SNR; the expected noise energy is subtracted per cell.
pub fn energy_in_box(burst: &SignalBurst, record_length: usize, fft_size: usize, snr_db: f64, seed: u64) -> f64 {
    let clean = wbsr::scene::render_scene(std::slice::from_ref(burst), record_length).unwrap();
    let p = burst.amplitude * burst.amplitude;
    let sigma = (p / (burst.bandwidth * 10f64.powf(snr_db / 10.0))).sqrt();
    let noisy = dsp::add_awgn(&clean, sigma, &mut Rng::new(seed)).unwrap();
    let (power, geom) = grid::power_grid(&noisy, fft_size, Window::Rectangular).unwrap();
    let noise_per_cell = sigma * sigma * fft_size as f64;
    let mask = grid::rasterize(&[burst_to_box(burst)], &geom);
    let mut inside = 0.0;
    let mut total = 0.0;
    for (i, &v) in power.iter().enumerate() {
        let s = v - noise_per_cell;
        total += s;
        if mask.cells()[i] {
            inside += s;
        }
    }
    inside / total
}

pub fn single_burst(label: ModulationClass, center: f64, bandwidth: f64, start: usize, dur: usize, seed: u64) -> SignalBurst {
    SignalBurst {
        label,
        center_freq: center,
        bandwidth,
        start_sample: start,
        duration_samples: dur,
        amplitude: 1.0,
        rrc_beta: label.is_rrc_shaped().then_some(0.35),
        burst_seed: seed,
    }
}

/// Unit-power check helper.
pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}

pub fn rendered(burst: &SignalBurst) -> Vec<Complex64> {
    render_burst(burst).unwrap()
}

pub fn buffer(x: Vec<Complex64>) -> ComplexBuffer {
    ComplexBuffer::new(x, 1.0).unwrap()
}

pub fn mask_from(frames: usize, bins: usize, cells: Vec<bool>) -> BinaryMask {
    BinaryMask::from_cells(grid::GridGeometry::with_frames(bins, frames), cells).unwrap()
}
