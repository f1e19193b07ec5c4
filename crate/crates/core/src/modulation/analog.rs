//! Analog modulations driven by synthetic programme audio.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::ModulationClass;
use crate::dsp::{self, ComplexBuffer};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Upper edge of generated audio, cycles/sample.
pub const AUDIO_BANDWIDTH: f64 = 0.1;
pub const AM_INDEX: f64 = 0.5;
/// FM peak deviation for full-scale audio, cycles/sample.
pub const FM_DEVIATION: f64 = 0.05;

// Voice band edges assuming a 40 kHz audio rate (300 Hz and 3 kHz).
const SPEECH_LOW: f64 = 300.0 / 40_000.0;
const SPEECH_HIGH: f64 = 3_000.0 / 40_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AudioKind {
    /// Sum of 3 to 8 tones, each with a slow amplitude envelope.
    Music,
    /// Voice-band filtered noise gated into talk spurts and pauses.
    Speech,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSource {
    pub kind: AudioKind,
    pub duration_samples: usize,
}

impl AudioSource {
    pub fn new(kind: AudioKind, duration_samples: usize) -> Self {
        Self { kind, duration_samples }
    }

    /// Real audio in `[-1, 1]` with no content above [`AUDIO_BANDWIDTH`].
    pub fn generate(&self, rng: &mut Rng) -> Vec<f64> {
        let n = self.duration_samples;
        let mut x = match self.kind {
            AudioKind::Music => music(n, rng),
            AudioKind::Speech => speech(n, rng),
        };
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            x.iter_mut().for_each(|v| *v /= peak);
        }
        x
    }
}

fn music(n: usize, rng: &mut Rng) -> Vec<f64> {
    let tones = rng.random_range(3..=8);
    let mut x = vec![0.0; n];
    for _ in 0..tones {
        let freq = rng.random_range(0.003..0.09);
        let amp = rng.random_range(0.2..1.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let env_freq = rng.random_range(1e-5..1e-4);
        let env_phase = rng.random_range(0.0..2.0 * PI);
        for (i, v) in x.iter_mut().enumerate() {
            let t = i as f64;
            let env = 1.0 + 0.5 * (2.0 * PI * env_freq * t + env_phase).sin();
            *v += amp * env * (2.0 * PI * freq * t + phase).sin();
        }
    }
    x
}

fn speech(n: usize, rng: &mut Rng) -> Vec<f64> {
    const TAPS: usize = 255;
    let pad = TAPS;
    let noise: Vec<f64> = (0..n + 2 * pad)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let hi = dsp::design_lowpass(SPEECH_HIGH, TAPS, 70.0).expect("valid design");
    let lo = dsp::design_lowpass(SPEECH_LOW, TAPS, 70.0).expect("valid design");
    let band: Vec<f64> = hi.taps.iter().zip(&lo.taps).map(|(a, b)| a - b).collect();
    let filtered = dsp::convolve_real(&noise, &band);
    let mut x: Vec<f64> = filtered[pad + TAPS / 2..pad + TAPS / 2 + n].to_vec();

    // Talk spurts and pauses with raised-cosine edges.
    const RAMP: usize = 600;
    let mut gate = vec![0.0; n];
    let mut i = 0;
    let mut talking = rng.random_bool(0.7);
    while i < n {
        let len = if talking {
            rng.random_range(4_000..16_000)
        } else {
            rng.random_range(1_500..6_000)
        };
        let end = (i + len).min(n);
        if talking {
            for (j, g) in gate[i..end].iter_mut().enumerate() {
                let edge = j.min(end - i - 1 - j);
                *g = if edge >= RAMP {
                    1.0
                } else {
                    0.5 - 0.5 * (PI * edge as f64 / RAMP as f64).cos()
                };
            }
        }
        talking = !talking;
        i = end;
    }
    x.iter_mut().zip(&gate).for_each(|(v, g)| *v *= g);
    x
}

/// Modulate `audio` onto a baseband carrier.
///
/// AM-DSB is `1 + 0.5 a(t)` with the carrier kept; AM-SSB is the upper
/// sideband `a + j H{a}` with a frequency-domain Hilbert transform; FM
/// integrates the audio with 0.05 cycles/sample peak deviation. The output
/// is scaled to unit mean power.
pub fn modulate_analog(class: ModulationClass, audio: &[f64]) -> Result<ComplexBuffer> {
    let (samples, _) = modulate_audio(class, audio)?;
    Ok(ComplexBuffer::from_vec(samples, 1.0))
}

pub(super) fn modulate_audio(class: ModulationClass, audio: &[f64]) -> Result<(Vec<Complex64>, f64)> {
    if audio.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("audio contains non-finite samples"));
    }
    let y: Vec<Complex64> = match class {
        ModulationClass::AmDsb => audio
            .iter()
            .map(|&a| Complex64::new(1.0 + AM_INDEX * a, 0.0))
            .collect(),
        ModulationClass::AmSsb => analytic(audio),
        ModulationClass::Fm => {
            let mut phase = 0.0f64;
            audio
                .iter()
                .map(|&a| {
                    let z = Complex64::from_polar(1.0, phase);
                    phase = (phase + 2.0 * PI * FM_DEVIATION * a).rem_euclid(2.0 * PI);
                    z
                })
                .collect()
        }
        other => {
            return Err(Error::param(format!("{other} is not an analog modulation")));
        }
    };
    Ok(super::normalize_power(y))
}

/// Analytic signal: negative frequencies removed, positive doubled.
fn analytic(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dsp::fft_in_place(&mut spec, false);
    for (k, z) in spec.iter_mut().enumerate() {
        let scale = if k == 0 || (n % 2 == 0 && k == n / 2) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *z *= scale / n as f64;
    }
    dsp::fft_in_place(&mut spec, true);
    spec
}
