//! Burst generators for the fourteen modulation classes.
//!
//! Every generator works at a fixed canonical rate and returns a burst with
//! unit average power. The scene renderer maps the class's canonical
//! occupied band onto the requested bandwidth by resampling.
//!
//! | classes              | canonical rate                  |
//! |----------------------|---------------------------------|
//! | PSK, QAM, OOK        | 2 samples/symbol, RRC shaped    |
//! | FSK2, FSK4, GMSK     | 8 samples/symbol                |
//! | OFDM512              | 640-point transform sample rate |
//! | AM-DSB, AM-SSB, FM   | audio sample rate               |

mod analog;
mod digital;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dsp::{self, ComplexBuffer};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub use analog::{modulate_analog, AudioKind, AudioSource, AM_INDEX, AUDIO_BANDWIDTH, FM_DEVIATION};
pub use digital::{
    constellation, gray_decode, gray_encode, rrc_span, OFDM_ACTIVE, OFDM_CP, OFDM_FFT, FSK_INDEX,
    GMSK_BT, GMSK_INDEX,
};

/// Samples per symbol for RRC-shaped single-carrier classes.
pub const LINEAR_SPS: usize = 2;
/// Samples per symbol for the constant-envelope FSK family.
pub const CPM_SPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModulationClass {
    Psk2,
    Psk4,
    Psk8,
    Qam16,
    Qam64,
    Qam256,
    Ofdm512,
    Fsk2,
    Fsk4,
    Gmsk,
    Ook,
    AmDsb,
    AmSsb,
    Fm,
}

impl ModulationClass {
    pub const ALL: [ModulationClass; 14] = [
        ModulationClass::Psk2,
        ModulationClass::Psk4,
        ModulationClass::Psk8,
        ModulationClass::Qam16,
        ModulationClass::Qam64,
        ModulationClass::Qam256,
        ModulationClass::Ofdm512,
        ModulationClass::Fsk2,
        ModulationClass::Fsk4,
        ModulationClass::Gmsk,
        ModulationClass::Ook,
        ModulationClass::AmDsb,
        ModulationClass::AmSsb,
        ModulationClass::Fm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModulationClass::Psk2 => "PSK2",
            ModulationClass::Psk4 => "PSK4",
            ModulationClass::Psk8 => "PSK8",
            ModulationClass::Qam16 => "QAM16",
            ModulationClass::Qam64 => "QAM64",
            ModulationClass::Qam256 => "QAM256",
            ModulationClass::Ofdm512 => "OFDM512",
            ModulationClass::Fsk2 => "FSK2",
            ModulationClass::Fsk4 => "FSK4",
            ModulationClass::Gmsk => "GMSK",
            ModulationClass::Ook => "OOK",
            ModulationClass::AmDsb => "AM_DSB",
            ModulationClass::AmSsb => "AM_SSB",
            ModulationClass::Fm => "FM",
        }
    }

    /// Number of distinct symbols, `None` for analog classes.
    pub fn order(self) -> Option<usize> {
        use ModulationClass::*;
        match self {
            Psk2 | Fsk2 | Gmsk | Ook => Some(2),
            Psk4 | Fsk4 | Ofdm512 => Some(4),
            Psk8 => Some(8),
            Qam16 => Some(16),
            Qam64 => Some(64),
            Qam256 => Some(256),
            AmDsb | AmSsb | Fm => None,
        }
    }

    pub fn is_analog(self) -> bool {
        matches!(self, ModulationClass::AmDsb | ModulationClass::AmSsb | ModulationClass::Fm)
    }

    /// Single-carrier linear classes shaped with an RRC filter.
    pub fn is_rrc_shaped(self) -> bool {
        use ModulationClass::*;
        matches!(self, Psk2 | Psk4 | Psk8 | Qam16 | Qam64 | Qam256 | Ook)
    }

    /// Canonical samples per symbol; `None` for OFDM and analog classes.
    pub fn samples_per_symbol(self) -> Option<usize> {
        use ModulationClass::*;
        match self {
            Fsk2 | Fsk4 | Gmsk => Some(CPM_SPS),
            c if c.is_rrc_shaped() => Some(LINEAR_SPS),
            _ => None,
        }
    }

    /// Occupied band `(low, high)` at the canonical rate.
    ///
    /// RRC classes use the null-to-null width `(1 + beta)` times the symbol
    /// rate and OFDM the edges of its active subcarriers. The remaining
    /// classes use the 99%-power band of a long reference burst.
    pub fn canonical_band(self, rrc_beta: f64) -> (f64, f64) {
        if self.is_rrc_shaped() {
            let half = (1.0 + rrc_beta) / (2.0 * LINEAR_SPS as f64);
            return (-half, half);
        }
        if self == ModulationClass::Ofdm512 {
            let half = (OFDM_ACTIVE as f64 / 2.0 + 0.5) / OFDM_FFT as f64;
            return (-half, half);
        }
        measured_band(self)
    }
}

const REFERENCE_LEN: usize = 1 << 17;
const REFERENCE_SEED: u64 = 0x0ccb_a9d0;

fn measured_band(class: ModulationClass) -> (f64, f64) {
    static BANDS: OnceLock<Vec<(ModulationClass, (f64, f64))>> = OnceLock::new();
    let table = BANDS.get_or_init(|| {
        ModulationClass::ALL
            .iter()
            .filter(|c| !c.is_rrc_shaped() && **c != ModulationClass::Ofdm512)
            .map(|&c| {
                let samples = if c.is_analog() {
                    // Half music, half speech.
                    let half = REFERENCE_LEN / 2;
                    let mut rng = Rng::new(REFERENCE_SEED);
                    let mut x = AudioSource::new(AudioKind::Music, half).generate(&mut rng);
                    x.extend(AudioSource::new(AudioKind::Speech, half).generate(&mut rng));
                    analog::modulate_audio(c, &x).expect("analog class").0
                } else {
                    let spec = BurstSpec::new(c, REFERENCE_LEN, 0.35, REFERENCE_SEED);
                    modulate_burst(&spec).expect("reference burst").buffer.into_samples()
                };
                (c, dsp::occupied_band(&samples, 0.99, 1024))
            })
            .collect()
    });
    table
        .iter()
        .find(|(c, _)| *c == class)
        .map(|(_, band)| *band)
        .expect("measured class")
}

impl fmt::Display for ModulationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModulationClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModulationClass::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown modulation class `{s}`")))
    }
}

impl TryFrom<String> for ModulationClass {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModulationClass> for String {
    fn from(c: ModulationClass) -> String {
        c.name().to_owned()
    }
}

/// Request for one burst at the canonical rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstSpec {
    pub modulation: ModulationClass,
    /// Output length in canonical samples.
    pub duration_samples: usize,
    /// Roll-off for RRC-shaped classes, ignored otherwise.
    pub rrc_beta: f64,
    pub seed: u64,
}

impl BurstSpec {
    pub fn new(modulation: ModulationClass, duration_samples: usize, rrc_beta: f64, seed: u64) -> Self {
        Self {
            modulation,
            duration_samples,
            rrc_beta,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.duration_samples == 0 {
            return Err(Error::param("burst duration must be positive"));
        }
        if self.modulation.is_rrc_shaped() && !(0.05..=1.0).contains(&self.rrc_beta) {
            return Err(Error::param(format!(
                "RRC roll-off must be in [0.05, 1.0], got {}",
                self.rrc_beta
            )));
        }
        Ok(())
    }
}

/// A generated burst with the side information a loopback receiver needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedBurst {
    /// Unit-power samples at the canonical rate.
    pub buffer: ComplexBuffer,
    /// Transmitted data symbols (per subcarrier for OFDM, empty for analog).
    pub symbols: Vec<u32>,
    /// Scale applied to the unit-energy constellation waveform.
    pub gain: f64,
}

/// Generate one burst; the samples of [`modulate_burst`].
pub fn modulate(spec: &BurstSpec) -> Result<ComplexBuffer> {
    modulate_burst(spec).map(|b| b.buffer)
}

pub fn modulate_burst(spec: &BurstSpec) -> Result<ModulatedBurst> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let n = spec.duration_samples;
    use ModulationClass::*;
    let (samples, symbols) = match spec.modulation {
        Psk2 | Psk4 | Psk8 | Qam16 | Qam64 | Qam256 | Ook => {
            digital::linear(spec.modulation, n, spec.rrc_beta, &mut rng)?
        }
        Fsk2 | Fsk4 => digital::cpfsk(spec.modulation, n, &mut rng),
        Gmsk => digital::gmsk(n, &mut rng)?,
        Ofdm512 => digital::ofdm(n, &mut rng),
        AmDsb | AmSsb | Fm => {
            let kind = if rand::Rng::random_bool(&mut rng, 0.5) {
                AudioKind::Music
            } else {
                AudioKind::Speech
            };
            let audio = AudioSource::new(kind, n).generate(&mut rng);
            let (samples, gain) = analog::modulate_audio(spec.modulation, &audio)?;
            return Ok(ModulatedBurst {
                buffer: ComplexBuffer::from_vec(samples, 1.0),
                symbols: Vec::new(),
                gain,
            });
        }
    };
    let (samples, gain) = normalize_power(samples);
    Ok(ModulatedBurst {
        buffer: ComplexBuffer::from_vec(samples, 1.0),
        symbols,
        gain,
    })
}

/// Scale to unit mean power; returns the applied gain (1 for silence).
pub(crate) fn normalize_power(mut x: Vec<num_complex::Complex64>) -> (Vec<num_complex::Complex64>, f64) {
    let p = dsp::mean_power(&x);
    if p <= 0.0 {
        return (x, 1.0);
    }
    let g = 1.0 / p.sqrt();
    x.iter_mut().for_each(|z| *z *= g);
    (x, g)
}
