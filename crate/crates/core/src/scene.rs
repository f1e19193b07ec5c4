//! Scene synthesis: draw a band layout from a profile, render every burst at
//! its canonical rate, resample it to the requested bandwidth, shift it into
//! place and sum. Scenes are noiseless.

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, ComplexBuffer};
use crate::error::{Error, Result};
use crate::grid::TimeFreqBox;
use crate::metrics::Truth;
use crate::modulation::{modulate, BurstSpec, ModulationClass};
use crate::profile::BandLayoutProfile;
use crate::rng::{split_seed, Rng};

/// Minimum `duration_samples * bandwidth` for a drawn burst.
pub const MIN_TIME_BANDWIDTH: f64 = 512.0;

const MAX_ATTEMPTS: usize = 100;
const RRC_BETA_RANGE: (f64, f64) = (0.05, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalBurst {
    pub label: ModulationClass,
    /// Normalized center frequency.
    pub center_freq: f64,
    /// Normalized bandwidth of the truth box.
    pub bandwidth: f64,
    pub start_sample: usize,
    pub duration_samples: usize,
    /// Linear amplitude; the rendered burst has mean power `amplitude^2`.
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rrc_beta: Option<f64>,
    pub burst_seed: u64,
}

impl SignalBurst {
    pub fn validate(&self, record_length: usize) -> Result<()> {
        let bad = |what: String| Err(Error::Invariant(format!("burst {}: {what}", self.label)));
        if !(self.bandwidth > 0.0 && self.bandwidth <= 1.0) {
            return bad(format!("bandwidth {} out of range", self.bandwidth));
        }
        let (lo, hi) = (
            self.center_freq - self.bandwidth / 2.0,
            self.center_freq + self.bandwidth / 2.0,
        );
        if !(lo >= -0.5 - 1e-12 && hi <= 0.5 + 1e-12) {
            return bad(format!("band [{lo}, {hi}] leaves [-0.5, 0.5]"));
        }
        if self.duration_samples == 0 {
            return bad("zero duration".into());
        }
        if self.start_sample + self.duration_samples > record_length {
            return bad(format!(
                "ends at {} past record length {record_length}",
                self.start_sample + self.duration_samples
            ));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return bad(format!("amplitude {} must be positive", self.amplitude));
        }
        if self.label.is_rrc_shaped() {
            match self.rrc_beta {
                Some(b) if (RRC_BETA_RANGE.0..=RRC_BETA_RANGE.1).contains(&b) => {}
                other => return bad(format!("RRC roll-off {other:?} invalid")),
            }
        }
        Ok(())
    }

    pub fn time_bandwidth(&self) -> f64 {
        self.duration_samples as f64 * self.bandwidth
    }
}

/// Truth box of a burst: its time span and `center +- bandwidth / 2`.
pub fn burst_to_box(burst: &SignalBurst) -> TimeFreqBox {
    let lo = (burst.center_freq - burst.bandwidth / 2.0).clamp(-0.5, 0.5);
    let hi = (burst.center_freq + burst.bandwidth / 2.0).clamp(-0.5, 0.5);
    let t0 = burst.start_sample as f64;
    TimeFreqBox::new(t0, t0 + burst.duration_samples as f64, lo, hi).expect("valid burst geometry")
}

pub fn burst_truth(burst: &SignalBurst) -> Truth {
    Truth {
        bbox: burst_to_box(burst),
        label: burst.label.name().to_owned(),
    }
}

/// Draw the bursts of one record.
///
/// The burst count is `round(occupancy * U(0.75, 1.25))`. Each burst gets up
/// to 100 draws to satisfy the minimum time-bandwidth product and, when the
/// profile asks for it, to avoid overlapping earlier bursts. A burst whose
/// product is still short has its duration extended; one that still
/// overlaps is dropped.
pub fn draw_layout(profile: &BandLayoutProfile, record_length: usize, rng: &mut Rng) -> Result<Vec<SignalBurst>> {
    profile.validate()?;
    if record_length == 0 {
        return Err(Error::param("record length must be positive"));
    }
    if profile.occupancy == 0.0 {
        return Ok(Vec::new());
    }
    let count = (profile.occupancy * rng.random_range(0.75..1.25)).round() as usize;
    let master = rng.seed();
    let mut bursts: Vec<SignalBurst> = Vec::with_capacity(count);
    for i in 0..count {
        let mut accepted = None;
        let mut last = None;
        for _ in 0..MAX_ATTEMPTS {
            let Some(b) = draw_burst(profile, record_length, split_seed(master, i as u64), rng) else {
                continue;
            };
            let tbp_ok = b.time_bandwidth() >= MIN_TIME_BANDWIDTH;
            let clear = !profile.avoid_overlap || !overlaps(&b, &bursts);
            if tbp_ok && clear {
                accepted = Some(b);
                break;
            }
            last = Some(b);
        }
        let burst = match (accepted, last) {
            (Some(b), _) => Some(b),
            (None, Some(b)) => extend_to_min_tbp(b, record_length)
                .filter(|b| !profile.avoid_overlap || !overlaps(b, &bursts)),
            (None, None) => None,
        };
        match burst {
            Some(b) => bursts.push(b),
            None => log::debug!("profile {}: dropped burst {i}", profile.name),
        }
    }
    Ok(bursts)
}

fn overlaps(b: &SignalBurst, others: &[SignalBurst]) -> bool {
    let bb = burst_to_box(b);
    others.iter().any(|o| burst_to_box(o).intersection_area(&bb) > 0.0)
}

fn extend_to_min_tbp(mut b: SignalBurst, record_length: usize) -> Option<SignalBurst> {
    let needed = (MIN_TIME_BANDWIDTH / b.bandwidth).ceil() as usize;
    if needed > record_length {
        return None;
    }
    if b.duration_samples < needed {
        b.duration_samples = needed;
        b.start_sample = b.start_sample.min(record_length - needed);
    }
    Some(b)
}

fn draw_burst(profile: &BandLayoutProfile, record_length: usize, burst_seed: u64, rng: &mut Rng) -> Option<SignalBurst> {
    let label = profile.draw_class(rng);
    let bandwidth = profile.bandwidth.sample(rng);
    let half = bandwidth / 2.0;
    let center_freq = match &profile.channel_grid {
        None => {
            if half >= 0.5 {
                0.0
            } else {
                rng.random_range(-0.5 + half..=0.5 - half)
            }
        }
        Some(g) => {
            let k_lo = ((-0.5 + half - g.first_center) / g.spacing - 1e-9).ceil() as i64;
            let k_hi = ((0.5 - half - g.first_center) / g.spacing + 1e-9).floor() as i64;
            if k_lo > k_hi {
                return None;
            }
            g.first_center + rng.random_range(k_lo..=k_hi) as f64 * g.spacing
        }
    };
    let duration_samples = ((profile.duration.sample(rng) * record_length as f64).round() as usize).clamp(1, record_length);
    let slack = record_length - duration_samples;
    let start_sample = (profile.start_time.sample(rng) * slack as f64).round() as usize;
    let amplitude = 10f64.powf(profile.amplitude_db.sample(rng) / 20.0);
    let rrc_beta = label
        .is_rrc_shaped()
        .then(|| rng.random_range(RRC_BETA_RANGE.0..=RRC_BETA_RANGE.1));
    Some(SignalBurst {
        label,
        center_freq,
        bandwidth,
        start_sample: start_sample.min(slack),
        duration_samples,
        amplitude,
        rrc_beta,
        burst_seed,
    })
}

/// Render one burst alone: `duration_samples` samples, shifted to its center
/// frequency and scaled by its amplitude.
pub fn render_burst(burst: &SignalBurst) -> Result<Vec<Complex64>> {
    let beta = burst.rrc_beta.unwrap_or(0.35);
    let (lo, hi) = burst.label.canonical_band(beta);
    let ratio = (hi - lo) / burst.bandwidth;
    let n = burst.duration_samples;
    let canonical_len = (n as f64 / ratio).ceil() as usize + 1;
    let spec = BurstSpec::new(burst.label, canonical_len, beta, burst.burst_seed);
    let canonical = modulate(&spec)?;
    let mut y = dsp::resample_chain(&canonical, ratio)?.into_samples();
    y.resize(n, Complex64::new(0.0, 0.0));
    dsp::frequency_shift(&mut y, burst.center_freq - (lo + hi) / 2.0 / ratio);
    y.iter_mut().for_each(|z| *z *= burst.amplitude);
    Ok(y)
}

/// Sum of all rendered bursts. Bursts render in parallel; the mix is
/// accumulated in list order so the result does not depend on scheduling.
pub fn render_scene(bursts: &[SignalBurst], record_length: usize) -> Result<ComplexBuffer> {
    for b in bursts {
        b.validate(record_length)?;
    }
    let rendered: Vec<Vec<Complex64>> = bursts.par_iter().map(render_burst).collect::<Result<_>>()?;
    let mut out = vec![Complex64::new(0.0, 0.0); record_length];
    for (b, y) in bursts.iter().zip(&rendered) {
        for (o, v) in out[b.start_sample..b.start_sample + b.duration_samples].iter_mut().zip(y) {
            *o += v;
        }
    }
    ComplexBuffer::new(out, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub record_length: usize,
    pub bursts: Vec<SignalBurst>,
    pub samples: ComplexBuffer,
    pub profile_name: String,
    pub master_seed: u64,
}

impl Scene {
    pub fn truths(&self) -> Vec<Truth> {
        self.bursts.iter().map(burst_truth).collect()
    }
}

/// Draw and render a record; `(profile, master_seed)` fixes it bit for bit.
pub fn generate_scene(profile: &BandLayoutProfile, record_length: usize, master_seed: u64) -> Result<Scene> {
    let mut rng = Rng::new(master_seed);
    let bursts = draw_layout(profile, record_length, &mut rng)?;
    let samples = render_scene(&bursts, record_length)?;
    Ok(Scene {
        record_length,
        bursts,
        samples,
        profile_name: profile.name.clone(),
        master_seed,
    })
}
