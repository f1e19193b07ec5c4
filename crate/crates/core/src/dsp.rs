//! Baseband numerics: sample buffers, chunked DFT, filter design,
//! arbitrary-ratio resampling and AWGN.
//!
//! Frequencies are normalized (cycles/sample, `[-0.5, 0.5)`) everywhere in
//! this module. The sample rate carried by [`ComplexBuffer`] is metadata.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Default wideband sample rate written to SigMF metadata, Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 100e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBuffer {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl ComplexBuffer {
    /// Fails if any sample is NaN/Inf or the rate is not positive.
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::param(format!("sample rate must be positive, got {sample_rate}")));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::param(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub(crate) fn from_vec(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        debug_assert!(samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self { samples, sample_rate }
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self::from_vec(vec![Complex64::new(0.0, 0.0); len], sample_rate)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|x|^2`; zero for an empty buffer.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTaps {
    pub taps: Vec<f64>,
    /// Group delay in samples.
    pub delay: usize,
}

impl FilterTaps {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }
}

/// Swap the halves of a spectrum so index 0 is the lowest frequency.
pub fn fftshift<T: Copy>(x: &mut [T]) {
    let n = x.len();
    x.rotate_left(n.div_ceil(2));
}

/// Run `f(frame_index, shifted_spectrum)` on each non-overlapping chunk.
pub(crate) fn for_each_dft_frame(
    x: &[Complex64],
    size: usize,
    mut f: impl FnMut(usize, &[Complex64]),
) -> Result<usize> {
    if size < 2 {
        return Err(Error::param(format!("DFT size must be >= 2, got {size}")));
    }
    if x.len() < size {
        return Err(Error::EmptyInput { needed: size, got: x.len() });
    }
    let fft = FftPlanner::new().plan_fft_forward(size);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex64::new(0.0, 0.0); size];
    let frames = x.len() / size;
    for (i, chunk) in x.chunks_exact(size).enumerate() {
        frame.copy_from_slice(chunk);
        fft.process_with_scratch(&mut frame, &mut scratch);
        fftshift(&mut frame);
        f(i, &frame);
    }
    Ok(frames)
}

/// Size-point DFT of every complete non-overlapping chunk, fftshifted so
/// bin 0 is normalized frequency -0.5.
pub fn dft(buf: &ComplexBuffer, size: usize) -> Result<Vec<Vec<Complex64>>> {
    let mut out = Vec::with_capacity(buf.len() / size.max(1));
    for_each_dft_frame(buf.samples(), size, |_, frame| out.push(frame.to_vec()))?;
    Ok(out)
}

/// In-place forward (`inverse = false`) or unnormalized inverse FFT.
pub(crate) fn fft_in_place(x: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(x.len())
    } else {
        planner.plan_fft_forward(x.len())
    };
    fft.process(x);
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window value at `x` in `[-1, 1]`.
fn kaiser(x: f64, beta: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - x * x).sqrt()) / bessel_i0(beta)
}

/// Kaiser beta for a stopband attenuation in dB.
pub fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Root-raised-cosine impulse response at `t` symbols.
fn rrc_value(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta == 0.0 {
        return sinc(t);
    }
    let x = 4.0 * beta * t;
    if (1.0 - x * x).abs() < 1e-10 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * t * (1.0 - beta)).sin() + x * (PI * t * (1.0 + beta)).cos()) / (PI * t * (1.0 - x * x))
}

/// Unit-energy root-raised-cosine taps spanning `span` symbols.
///
/// The length is `2 * ceil(span * sps / 2) + 1`, always odd.
pub fn design_rrc(beta: f64, sps: usize, span: usize) -> Result<FilterTaps> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param(format!("RRC roll-off must be in [0, 1], got {beta}")));
    }
    if sps < 1 {
        return Err(Error::param("RRC samples/symbol must be >= 1"));
    }
    if span < 4 {
        return Err(Error::param(format!("RRC span must be >= 4 symbols, got {span}")));
    }
    let half = (span * sps).div_ceil(2);
    let mut taps: Vec<f64> = (0..=2 * half)
        .map(|i| rrc_value((i as f64 - half as f64) / sps as f64, beta))
        .collect();
    let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= norm);
    Ok(FilterTaps { taps, delay: half })
}

/// Gaussian pulse-shaping taps with unit DC gain, as used by GMSK.
pub fn design_gaussian(bt: f64, sps: usize, span: usize) -> Result<FilterTaps> {
    if !(bt > 0.0 && bt.is_finite()) || sps < 1 || span < 1 {
        return Err(Error::param("gaussian filter needs bt > 0, sps >= 1, span >= 1"));
    }
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * bt);
    let half = (span * sps).div_ceil(2);
    let mut taps: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let t = (i as f64 - half as f64) / sps as f64;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(FilterTaps { taps, delay: half })
}

/// Kaiser-windowed sinc low-pass with unit DC gain; `cutoff` is the
/// half-amplitude edge in cycles/sample.
pub fn design_lowpass(cutoff: f64, num_taps: usize, atten_db: f64) -> Result<FilterTaps> {
    if !(cutoff > 0.0 && cutoff < 0.5) || num_taps < 3 || num_taps % 2 == 0 {
        return Err(Error::param("lowpass needs 0 < cutoff < 0.5 and an odd tap count >= 3"));
    }
    let half = num_taps / 2;
    let beta = kaiser_beta(atten_db);
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|i| {
            let n = i as f64 - half as f64;
            2.0 * cutoff * sinc(2.0 * cutoff * n) * kaiser(n / half as f64, beta)
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(FilterTaps { taps, delay: half })
}

/// Full linear convolution of a complex sequence with real taps.
pub fn convolve(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if x.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + taps.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi.re == 0.0 && xi.im == 0.0 {
            continue;
        }
        for (j, &h) in taps.iter().enumerate() {
            y[i + j] += xi * h;
        }
    }
    y
}

/// Real-valued counterpart of [`convolve`].
pub fn convolve_real(x: &[f64], taps: &[f64]) -> Vec<f64> {
    if x.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let mut y = vec![0.0; x.len() + taps.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &h) in taps.iter().enumerate() {
            y[i + j] += xi * h;
        }
    }
    y
}

/// Filter and compensate the group delay: output has the same length as
/// the input and is time-aligned with it.
pub fn filter_aligned(x: &[Complex64], taps: &FilterTaps) -> Vec<Complex64> {
    let full = convolve(x, &taps.taps);
    full.into_iter().skip(taps.delay).take(x.len()).collect()
}

// Resampler prototype: windowed sinc over +/-HALF_TAPS low-rate samples,
// tabulated at PHASES points per sample and linearly interpolated.
const HALF_TAPS: usize = 16;
const PHASES: usize = 128;
const RESAMPLER_KAISER_BETA: f64 = 7.0;

pub const MIN_RATIO: f64 = 1.0 / 64.0;
pub const MAX_RATIO: f64 = 64.0;

fn resampler_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 2 * HALF_TAPS * PHASES + 2;
        (0..n)
            .map(|i| {
                let u = i as f64 / PHASES as f64 - HALF_TAPS as f64;
                sinc(u) * kaiser(u / HALF_TAPS as f64, RESAMPLER_KAISER_BETA)
            })
            .collect()
    })
}

#[inline]
fn prototype(table: &[f64], u: f64) -> f64 {
    let pos = (u + HALF_TAPS as f64) * PHASES as f64;
    if pos < 0.0 {
        return 0.0;
    }
    let i = pos as usize;
    if i + 1 >= table.len() {
        return 0.0;
    }
    let frac = pos - i as f64;
    table[i] + (table[i + 1] - table[i]) * frac
}

/// Change the sample rate by `ratio` (output samples per input sample).
///
/// Polyphase Kaiser-windowed sinc, 32 taps per phase and 128 phases with
/// linear interpolation between phases. When decimating, the prototype is
/// stretched so its cutoff tracks the output Nyquist.
/// Output length is `round(len * ratio)`.
pub fn resample(buf: &ComplexBuffer, ratio: f64) -> Result<ComplexBuffer> {
    if !(MIN_RATIO..=MAX_RATIO).contains(&ratio) {
        return Err(Error::param(format!(
            "resampling ratio {ratio} outside [{MIN_RATIO}, {MAX_RATIO}]"
        )));
    }
    let x = buf.samples();
    let n_out = (x.len() as f64 * ratio).round() as usize;
    let table = resampler_table();
    let stretch = ratio.min(1.0);
    let reach = HALF_TAPS as f64 / stretch;
    let mut y = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let t = m as f64 / ratio;
        let k0 = (t - reach).ceil().max(0.0) as usize;
        let k1 = ((t + reach).floor() as isize).min(x.len() as isize - 1);
        let mut acc = Complex64::new(0.0, 0.0);
        if k1 >= k0 as isize {
            for (k, &xk) in x.iter().enumerate().take(k1 as usize + 1).skip(k0) {
                acc += xk * prototype(table, (t - k as f64) * stretch);
            }
        }
        y.push(acc * stretch);
    }
    Ok(ComplexBuffer::from_vec(y, buf.sample_rate() * ratio))
}

/// [`resample`] for any positive ratio, split into equal stages that each
/// stay inside the single-stage range.
pub fn resample_chain(buf: &ComplexBuffer, ratio: f64) -> Result<ComplexBuffer> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::param(format!("resampling ratio must be positive, got {ratio}")));
    }
    let stages = (ratio.ln().abs() / MAX_RATIO.ln()).ceil().max(1.0) as i32;
    let step = ratio.powf(1.0 / stages as f64);
    let mut out = resample(buf, step)?;
    for _ in 1..stages {
        out = resample(&out, step)?;
    }
    Ok(out)
}

/// Add complex Gaussian noise with total variance `sigma^2` per sample
/// (`sigma^2 / 2` on each of I and Q).
pub fn add_awgn(buf: &ComplexBuffer, sigma: f64, rng: &mut Rng) -> Result<ComplexBuffer> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::param(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(buf.clone());
    }
    let s = sigma / 2f64.sqrt();
    let y = buf
        .samples()
        .iter()
        .map(|&z| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            z + Complex64::new(re * s, im * s)
        })
        .collect();
    Ok(ComplexBuffer::from_vec(y, buf.sample_rate()))
}

/// Multiply by `exp(j 2 pi freq n)`.
pub fn frequency_shift(x: &mut [Complex64], freq: f64) {
    if freq == 0.0 {
        return;
    }
    for (n, z) in x.iter_mut().enumerate() {
        // Reduce the phase argument to keep precision on long buffers.
        let cycles = (freq * n as f64).fract();
        *z *= Complex64::from_polar(1.0, 2.0 * PI * cycles);
    }
}

/// Welch-averaged power spectrum (Hann window, 50% overlap), fftshifted.
pub fn averaged_spectrum(x: &[Complex64], nfft: usize) -> Vec<f64> {
    let mut acc = vec![0.0; nfft];
    if x.len() < nfft || nfft < 2 {
        return acc;
    }
    let window: Vec<f64> = (0..nfft)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nfft as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut frame = vec![Complex64::new(0.0, 0.0); nfft];
    let hop = nfft / 2;
    let mut start = 0;
    let mut count = 0usize;
    while start + nfft <= x.len() {
        for (f, (&s, &w)) in frame.iter_mut().zip(x[start..start + nfft].iter().zip(&window)) {
            *f = s * w;
        }
        fft.process(&mut frame);
        for (a, z) in acc.iter_mut().zip(&frame) {
            *a += z.norm_sqr();
        }
        count += 1;
        start += hop;
    }
    fftshift(&mut acc);
    acc.iter_mut().for_each(|a| *a /= count as f64);
    acc
}

/// Frequency band `(low, high)` holding `fraction` of the total power,
/// trimming equal tails from each side of the averaged spectrum.
pub fn occupied_band(x: &[Complex64], fraction: f64, nfft: usize) -> (f64, f64) {
    let spec = averaged_spectrum(x, nfft);
    let total: f64 = spec.iter().sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let tail = total * (1.0 - fraction) / 2.0;
    let mut acc = 0.0;
    let mut lo = 0;
    for (i, p) in spec.iter().enumerate() {
        if acc + p > tail {
            lo = i;
            break;
        }
        acc += p;
    }
    acc = 0.0;
    let mut hi = nfft - 1;
    for (i, p) in spec.iter().enumerate().rev() {
        if acc + p > tail {
            hi = i;
            break;
        }
        acc += p;
    }
    let bin = 1.0 / nfft as f64;
    (-0.5 + lo as f64 * bin, -0.5 + (hi + 1) as f64 * bin)
}
