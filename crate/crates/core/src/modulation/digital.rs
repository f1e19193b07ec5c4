use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;

use super::{ModulationClass, CPM_SPS, LINEAR_SPS};
use crate::dsp::{self, FilterTaps};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const FSK_INDEX: f64 = 1.0;
pub const GMSK_BT: f64 = 0.3;
pub const GMSK_INDEX: f64 = 0.5;

pub const OFDM_FFT: usize = 640;
pub const OFDM_ACTIVE: usize = 512;
pub const OFDM_CP: usize = OFDM_FFT / 8;

pub fn gray_encode(x: u32) -> u32 {
    x ^ (x >> 1)
}

pub fn gray_decode(mut g: u32) -> u32 {
    let mut x = g;
    while g > 1 {
        g >>= 1;
        x ^= g;
    }
    x
}

/// Unit-average-energy constellation indexed by data value.
///
/// PSK and the per-axis PAM levels of square QAM are Gray coded, so
/// neighbouring points differ in one bit.
pub fn constellation(class: ModulationClass) -> Result<Vec<Complex64>> {
    use ModulationClass::*;
    let points = match class {
        Psk2 | Psk4 | Psk8 => {
            let m = class.order().unwrap_or(2) as u32;
            let offset = if m == 4 { PI / 4.0 } else { 0.0 };
            (0..m)
                .map(|d| {
                    let pos = gray_decode(d) as f64;
                    Complex64::from_polar(1.0, offset + 2.0 * PI * pos / m as f64)
                })
                .collect()
        }
        Qam16 | Qam64 | Qam256 => {
            let m = class.order().unwrap_or(16);
            let side = (m as f64).sqrt() as u32;
            let bits = side.trailing_zeros();
            let scale = (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
            let level = |b: u32| (2.0 * gray_decode(b) as f64 - (side as f64 - 1.0)) / scale;
            (0..m as u32)
                .map(|d| Complex64::new(level(d >> bits), level(d & (side - 1))))
                .collect()
        }
        Ook => vec![Complex64::new(0.0, 0.0), Complex64::new(2f64.sqrt(), 0.0)],
        _ => {
            return Err(Error::param(format!("{class} has no linear constellation")));
        }
    };
    Ok(points)
}

/// RRC span in symbols: long enough that truncation ISI stays small for
/// small roll-offs.
pub fn rrc_span(beta: f64) -> usize {
    ((12.0 / beta.max(0.05)).ceil() as usize).clamp(24, 240)
}

fn random_symbols(count: usize, order: usize, rng: &mut Rng) -> Vec<u32> {
    (0..count).map(|_| rng.random_range(0..order as u32)).collect()
}

/// PSK, QAM and OOK: symbols at `LINEAR_SPS`, RRC shaped, aligned so symbol
/// `k` peaks at sample `LINEAR_SPS * k`.
pub(super) fn linear(
    class: ModulationClass,
    len: usize,
    beta: f64,
    rng: &mut Rng,
) -> Result<(Vec<Complex64>, Vec<u32>)> {
    let points = constellation(class)?;
    let count = len.div_ceil(LINEAR_SPS);
    let symbols = random_symbols(count, points.len(), rng);
    let mut up = vec![Complex64::new(0.0, 0.0); count * LINEAR_SPS];
    for (k, &s) in symbols.iter().enumerate() {
        up[k * LINEAR_SPS] = points[s as usize];
    }
    let taps = dsp::design_rrc(beta, LINEAR_SPS, rrc_span(beta))?;
    let mut y = dsp::filter_aligned(&up, &taps);
    y.truncate(len);
    Ok((y, symbols))
}

/// Continuous-phase FSK with rectangular frequency pulses.
pub(super) fn cpfsk(class: ModulationClass, len: usize, rng: &mut Rng) -> (Vec<Complex64>, Vec<u32>) {
    let m = class.order().unwrap_or(2);
    let count = len.div_ceil(CPM_SPS);
    let symbols = random_symbols(count, m, rng);
    let mut phase = 0.0f64;
    let mut y = Vec::with_capacity(len);
    'outer: for &s in &symbols {
        let freq = fsk_tone(gray_decode(s), m);
        for _ in 0..CPM_SPS {
            if y.len() == len {
                break 'outer;
            }
            y.push(Complex64::from_polar(1.0, phase));
            phase = (phase + 2.0 * PI * freq).rem_euclid(2.0 * PI);
        }
    }
    (y, symbols)
}

/// Tone offset of FSK level `pos` in cycles/sample at the canonical rate.
pub(crate) fn fsk_tone(pos: u32, order: usize) -> f64 {
    (2.0 * pos as f64 - (order as f64 - 1.0)) * FSK_INDEX / (2.0 * CPM_SPS as f64)
}

pub(super) fn gmsk(len: usize, rng: &mut Rng) -> Result<(Vec<Complex64>, Vec<u32>)> {
    let count = len.div_ceil(CPM_SPS);
    let symbols = random_symbols(count, 2, rng);
    let nrz: Vec<Complex64> = symbols
        .iter()
        .flat_map(|&b| {
            let v = if b == 1 { 1.0 } else { -1.0 };
            std::iter::repeat_n(Complex64::new(v, 0.0), CPM_SPS)
        })
        .collect();
    let g: FilterTaps = dsp::design_gaussian(GMSK_BT, CPM_SPS, 4)?;
    let shaped = dsp::filter_aligned(&nrz, &g);
    let step = PI * GMSK_INDEX / CPM_SPS as f64;
    let mut phase = 0.0f64;
    let y = shaped
        .iter()
        .take(len)
        .map(|f| {
            let z = Complex64::from_polar(1.0, phase);
            phase = (phase + step * f.re).rem_euclid(2.0 * PI);
            z
        })
        .collect();
    Ok((y, symbols))
}

/// Subcarrier index (DFT bin, may be negative) of active carrier `i`.
pub(crate) fn ofdm_carrier(i: usize) -> i64 {
    let half = (OFDM_ACTIVE / 2) as i64;
    let i = i as i64;
    if i < half {
        i - half
    } else {
        i - half + 1
    }
}

/// 512 QPSK subcarriers around an unused DC bin, cyclic prefix of 1/8.
pub(super) fn ofdm(len: usize, rng: &mut Rng) -> (Vec<Complex64>, Vec<u32>) {
    let qpsk = constellation(ModulationClass::Psk4).expect("qpsk");
    let sym_len = OFDM_FFT + OFDM_CP;
    let count = len.div_ceil(sym_len);
    let symbols = random_symbols(count * OFDM_ACTIVE, 4, rng);
    let mut y = Vec::with_capacity(count * sym_len);
    let mut grid = vec![Complex64::new(0.0, 0.0); OFDM_FFT];
    for chunk in symbols.chunks_exact(OFDM_ACTIVE) {
        grid.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (i, &s) in chunk.iter().enumerate() {
            let bin = ofdm_carrier(i).rem_euclid(OFDM_FFT as i64) as usize;
            grid[bin] = qpsk[s as usize];
        }
        dsp::fft_in_place(&mut grid, true);
        y.extend_from_slice(&grid[OFDM_FFT - OFDM_CP..]);
        y.extend_from_slice(&grid);
    }
    y.truncate(len);
    (y, symbols)
}
