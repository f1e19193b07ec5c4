//! Band layout profiles: parametric descriptions of how bursts populate a
//! record. Profiles are JSON documents; sixteen ship with the crate.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::ModulationClass;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distribution {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
    Choice { values: Vec<f64> },
}

impl Distribution {
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Distribution::Constant { value } => *value,
            Distribution::Uniform { low, high } => {
                if high > low {
                    rng.random_range(*low..*high)
                } else {
                    *low
                }
            }
            Distribution::LogUniform { low, high } => {
                if high > low {
                    rng.random_range(low.ln()..high.ln()).exp()
                } else {
                    *low
                }
            }
            Distribution::Choice { values } => values[rng.random_range(0..values.len())],
        }
    }

    /// Smallest and largest value the distribution can produce.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Distribution::Constant { value } => (*value, *value),
            Distribution::Uniform { low, high } | Distribution::LogUniform { low, high } => (*low, *high),
            Distribution::Choice { values } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
        }
    }

    fn check(&self, what: &str, min: f64, max: f64) -> std::result::Result<(), String> {
        match self {
            Distribution::Choice { values } if values.is_empty() => {
                return Err(format!("{what}: empty choice list"));
            }
            Distribution::Uniform { low, high } | Distribution::LogUniform { low, high } if low > high => {
                return Err(format!("{what}: low {low} > high {high}"));
            }
            Distribution::LogUniform { low, .. } if *low <= 0.0 => {
                return Err(format!("{what}: log-uniform needs a positive lower bound"));
            }
            _ => {}
        }
        let (lo, hi) = self.support();
        if !(lo.is_finite() && hi.is_finite()) || lo < min || hi > max {
            return Err(format!("{what}: support [{lo}, {hi}] outside [{min}, {max}]"));
        }
        Ok(())
    }
}

/// Channel raster: burst centers are restricted to `first_center + k * spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGrid {
    pub first_center: f64,
    pub spacing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedClass {
    pub class: ModulationClass,
    pub weight: f64,
}

fn default_start() -> Distribution {
    Distribution::Uniform { low: 0.0, high: 1.0 }
}

fn default_amplitude() -> Distribution {
    Distribution::Uniform { low: -30.0, high: 0.0 }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandLayoutProfile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub channel_grid: Option<ChannelGrid>,
    /// Normalized bandwidth.
    pub bandwidth: Distribution,
    /// Fraction of the record length.
    pub duration: Distribution,
    /// Fraction of the slack (record length minus duration) before the start.
    #[serde(default = "default_start")]
    pub start_time: Distribution,
    /// Burst amplitude in dBFS; uniform in dB by default, i.e. log-uniform
    /// in linear amplitude.
    #[serde(default = "default_amplitude")]
    pub amplitude_db: Distribution,
    pub modulation_pool: Vec<WeightedClass>,
    /// Expected burst count per record.
    pub occupancy: f64,
    /// Reject draws whose truth box overlaps an earlier burst.
    #[serde(default = "default_true")]
    pub avoid_overlap: bool,
}

impl BandLayoutProfile {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::Profile {
            name: self.name.clone(),
            reason,
        };
        self.bandwidth.check("bandwidth", f64::MIN_POSITIVE, 0.5).map_err(fail)?;
        self.duration.check("duration", f64::MIN_POSITIVE, 1.0).map_err(fail)?;
        self.start_time.check("start_time", 0.0, 1.0).map_err(fail)?;
        self.amplitude_db.check("amplitude_db", -50.0, 0.0).map_err(fail)?;
        if !(self.occupancy.is_finite() && self.occupancy >= 0.0) {
            return Err(fail(format!("occupancy must be >= 0, got {}", self.occupancy)));
        }
        if self.occupancy > 0.0 && self.modulation_pool.is_empty() {
            return Err(fail("empty modulation pool".into()));
        }
        if let Some(w) = self.modulation_pool.iter().find(|w| !(w.weight.is_finite() && w.weight > 0.0)) {
            return Err(fail(format!("weight for {} must be positive", w.class)));
        }
        if let Some(g) = &self.channel_grid {
            if !(g.spacing.is_finite() && g.spacing > 0.0 && g.first_center.abs() < 0.5) {
                return Err(fail("channel grid needs positive spacing and a center inside (-0.5, 0.5)".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: BandLayoutProfile = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&text)
    }

    pub(crate) fn draw_class(&self, rng: &mut Rng) -> ModulationClass {
        let total: f64 = self.modulation_pool.iter().map(|w| w.weight).sum();
        let mut x = rng.random_range(0.0..total);
        for w in &self.modulation_pool {
            if x < w.weight {
                return w.class;
            }
            x -= w.weight;
        }
        self.modulation_pool[self.modulation_pool.len() - 1].class
    }
}

const BUILTIN: [(&str, &str); 16] = [
    ("ism-burst", include_str!("../profiles/ism-burst.json")),
    ("cellular-uplink", include_str!("../profiles/cellular-uplink.json")),
    ("cellular-downlink", include_str!("../profiles/cellular-downlink.json")),
    ("public-safety-narrowband", include_str!("../profiles/public-safety-narrowband.json")),
    ("pcs", include_str!("../profiles/pcs.json")),
    ("ofdm-broadcast", include_str!("../profiles/ofdm-broadcast.json")),
    ("dense-hopper", include_str!("../profiles/dense-hopper.json")),
    ("sparse-wideband", include_str!("../profiles/sparse-wideband.json")),
    ("analog-broadcast", include_str!("../profiles/analog-broadcast.json")),
    ("amateur-hf", include_str!("../profiles/amateur-hf.json")),
    ("satcom-narrow", include_str!("../profiles/satcom-narrow.json")),
    ("telemetry", include_str!("../profiles/telemetry.json")),
    ("paging", include_str!("../profiles/paging.json")),
    ("wlan-like", include_str!("../profiles/wlan-like.json")),
    ("iot-lpwan", include_str!("../profiles/iot-lpwan.json")),
    ("mixed", include_str!("../profiles/mixed.json")),
];

pub fn builtin_profiles() -> Vec<BandLayoutProfile> {
    BUILTIN
        .iter()
        .map(|(name, text)| {
            let p = BandLayoutProfile::from_json(text).unwrap_or_else(|e| panic!("built-in profile {name}: {e}"));
            debug_assert_eq!(&p.name, name);
            p
        })
        .collect()
}

pub fn builtin_profile(name: &str) -> Option<BandLayoutProfile> {
    builtin_profiles().into_iter().find(|p| p.name == name)
}

/// A built-in name or a path to a profile file.
pub fn resolve_profile(name_or_path: &str) -> Result<BandLayoutProfile> {
    match builtin_profile(name_or_path) {
        Some(p) => Ok(p),
        None => BandLayoutProfile::load(Path::new(name_or_path)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_valid_builtins_with_unique_names() {
        let ps = builtin_profiles();
        assert_eq!(ps.len(), 16);
        let mut names: Vec<&str> = ps.iter().map(|p| p.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 16);
    }

    #[test]
    fn builtins_cover_every_class() {
        let ps = builtin_profiles();
        for c in ModulationClass::ALL {
            assert!(
                ps.iter().any(|p| p.modulation_pool.iter().any(|w| w.class == c)),
                "{c} unused"
            );
        }
    }

    #[test]
    fn validation_rejects_bad_supports() {
        let mut p = builtin_profile("ism-burst").unwrap();
        p.bandwidth = Distribution::Uniform { low: 0.1, high: 0.6 };
        assert!(matches!(p.validate(), Err(Error::Profile { .. })));
        let mut p = builtin_profile("ism-burst").unwrap();
        p.amplitude_db = Distribution::Constant { value: 3.0 };
        assert!(p.validate().is_err());
        let mut p = builtin_profile("ism-burst").unwrap();
        p.modulation_pool[0].weight = 0.0;
        assert!(p.validate().is_err());
        let mut p = builtin_profile("ism-burst").unwrap();
        p.bandwidth = Distribution::LogUniform { low: 0.0, high: 0.1 };
        assert!(p.validate().is_err());
    }

    #[test]
    fn distribution_samples_stay_in_support() {
        let mut rng = Rng::new(1);
        let dists = [
            Distribution::Uniform { low: 0.1, high: 0.2 },
            Distribution::LogUniform { low: 0.001, high: 0.1 },
            Distribution::Choice { values: vec![1.0, 2.0] },
            Distribution::Constant { value: 0.3 },
        ];
        for d in &dists {
            let (lo, hi) = d.support();
            for _ in 0..1000 {
                let v = d.sample(&mut rng);
                assert!(v >= lo && v <= hi);
            }
        }
    }
}
