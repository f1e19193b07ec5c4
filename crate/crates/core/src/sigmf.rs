//! SigMF records: interleaved little-endian int16 I/Q beside JSON metadata
//! carrying one annotation per burst.
//!
//! Frequencies are stored in Hz around a 0 Hz record center, so
//! `edge_hz = normalized * sample_rate`. The per-record quantization scale
//! and the regeneration parameters live in the `wbsr:` extension namespace.
//! Fields this crate does not know about are kept and written back.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dsp::ComplexBuffer;
use crate::grid::TimeFreqBox;
use crate::metrics::Truth;
use crate::scene::Scene;

pub const DATATYPE: &str = "ci16_le";
pub const SIGMF_VERSION: &str = "1.0.0";
/// Largest quantized component magnitude.
pub const FULL_SCALE: f64 = 32000.0;

#[derive(Debug, thiserror::Error)]
pub enum SigmfError {
    #[error("unsupported datatype `{0}` (only ci16_le)")]
    Datatype(String),
    #[error("{path}: truncated data, {len} bytes is not a whole number of ci16 samples (partial sample at byte offset {offset})")]
    Truncated { path: String, offset: u64, len: u64 },
    #[error("malformed metadata: {0}")]
    Metadata(String),
    #[error("annotation {index}: {reason}")]
    Annotation { index: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type SResult<T> = std::result::Result<T, SigmfError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SigmfError + '_ {
    move |source| SigmfError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Global {
    #[serde(rename = "core:datatype")]
    pub datatype: String,
    #[serde(rename = "core:sample_rate")]
    pub sample_rate: f64,
    #[serde(rename = "core:version")]
    pub version: String,
    #[serde(rename = "core:description", default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Multiplier applied before quantization; samples are `int / scale`.
    #[serde(rename = "wbsr:scale", default = "one")]
    pub scale: f64,
    #[serde(rename = "wbsr:master_seed", default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(rename = "wbsr:profile", default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    #[serde(rename = "core:sample_start")]
    pub sample_start: u64,
    #[serde(rename = "core:frequency", default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(rename = "core:sample_start")]
    pub sample_start: u64,
    #[serde(rename = "core:sample_count")]
    pub sample_count: u64,
    #[serde(rename = "core:freq_lower_edge")]
    pub freq_lower_edge: f64,
    #[serde(rename = "core:freq_upper_edge")]
    pub freq_upper_edge: f64,
    #[serde(rename = "core:label")]
    pub label: String,
    #[serde(rename = "wbsr:amplitude", default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(rename = "wbsr:rrc_beta", default, skip_serializing_if = "Option::is_none")]
    pub rrc_beta: Option<f64>,
    #[serde(rename = "wbsr:burst_seed", default, skip_serializing_if = "Option::is_none")]
    pub burst_seed: Option<u64>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub global: Global,
    #[serde(default)]
    pub captures: Vec<Capture>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmfRecord {
    pub data_path: PathBuf,
    pub meta_path: PathBuf,
    pub meta: Metadata,
}

/// Data and metadata paths for a record base name. A trailing
/// `.sigmf-data`, `.sigmf-meta` or `.sigmf` is stripped first.
pub fn record_paths(base: &Path) -> (PathBuf, PathBuf) {
    let s = base.to_string_lossy();
    let stem = [".sigmf-data", ".sigmf-meta", ".sigmf"]
        .iter()
        .find_map(|suf| s.strip_suffix(suf))
        .unwrap_or(&s);
    (
        PathBuf::from(format!("{stem}.sigmf-data")),
        PathBuf::from(format!("{stem}.sigmf-meta")),
    )
}

/// Scale that maps the largest I or Q magnitude to [`FULL_SCALE`]; 1 for an
/// all-zero buffer.
pub fn full_scale_factor(samples: &[Complex64]) -> f64 {
    let peak = samples.iter().fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
    if peak > 0.0 {
        FULL_SCALE / peak
    } else {
        1.0
    }
}

fn quantize(v: f64) -> i16 {
    // f64::round rounds half away from zero.
    (v.round()).clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Interleaved I, Q little-endian int16 bytes of `samples * scale`.
pub fn encode_samples(samples: &[Complex64], scale: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 4);
    for z in samples {
        out.extend_from_slice(&quantize(z.re * scale).to_le_bytes());
        out.extend_from_slice(&quantize(z.im * scale).to_le_bytes());
    }
    out
}

pub fn decode_samples(bytes: &[u8], scale: f64) -> Vec<Complex64> {
    bytes
        .chunks_exact(4)
        .map(|c| {
            let i = i16::from_le_bytes([c[0], c[1]]) as f64;
            let q = i16::from_le_bytes([c[2], c[3]]) as f64;
            Complex64::new(i / scale, q / scale)
        })
        .collect()
}

/// Write `samples` as a SigMF data file with the given scale.
pub fn write_samples(path: &Path, samples: &[Complex64], scale: f64) -> SResult<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&encode_samples(samples, scale)).map_err(io_err(path))
}

fn annotation_for(scene_burst: &crate::scene::SignalBurst, sample_rate_hz: f64) -> Annotation {
    let b = crate::scene::burst_to_box(scene_burst);
    Annotation {
        sample_start: scene_burst.start_sample as u64,
        sample_count: scene_burst.duration_samples as u64,
        freq_lower_edge: b.f_low() * sample_rate_hz,
        freq_upper_edge: b.f_high() * sample_rate_hz,
        label: scene_burst.label.name().to_owned(),
        amplitude: Some(scene_burst.amplitude),
        rrc_beta: scene_burst.rrc_beta,
        burst_seed: Some(scene_burst.burst_seed),
        extra: Map::new(),
    }
}

/// Metadata for a scene, annotations sorted by start sample.
pub fn scene_metadata(scene: &Scene, sample_rate_hz: f64, scale: f64) -> Metadata {
    let mut annotations: Vec<Annotation> = scene.bursts.iter().map(|b| annotation_for(b, sample_rate_hz)).collect();
    annotations.sort_by_key(|a| a.sample_start);
    Metadata {
        global: Global {
            datatype: DATATYPE.into(),
            sample_rate: sample_rate_hz,
            version: SIGMF_VERSION.into(),
            description: Some(format!("synthetic wideband scene, profile {}", scene.profile_name)),
            scale,
            master_seed: Some(scene.master_seed),
            profile: Some(scene.profile_name.clone()),
            extra: Map::new(),
        },
        captures: vec![Capture {
            sample_start: 0,
            frequency: Some(0.0),
            extra: Map::new(),
        }],
        annotations,
        extra: Map::new(),
    }
}

/// Quantize a scene to full scale and write `<base>.sigmf-data` and
/// `<base>.sigmf-meta`.
pub fn write_record(scene: &Scene, sample_rate_hz: f64, base: &Path) -> SResult<SigmfRecord> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(SigmfError::Metadata(format!("sample rate must be positive, got {sample_rate_hz}")));
    }
    let samples = scene.samples.samples();
    let scale = full_scale_factor(samples);
    let meta = scene_metadata(scene, sample_rate_hz, scale);
    write_with_metadata(base, samples, meta)
}

/// Write samples under existing metadata, quantizing with `meta.global.scale`.
pub fn write_with_metadata(base: &Path, samples: &[Complex64], meta: Metadata) -> SResult<SigmfRecord> {
    let (data_path, meta_path) = record_paths(base);
    write_samples(&data_path, samples, meta.global.scale)?;
    let text = serde_json::to_string_pretty(&meta).map_err(|e| SigmfError::Metadata(e.to_string()))?;
    fs::write(&meta_path, text + "\n").map_err(io_err(&meta_path))?;
    Ok(SigmfRecord {
        data_path,
        meta_path,
        meta,
    })
}

pub fn read_metadata(path: &Path) -> SResult<Metadata> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let meta: Metadata = serde_json::from_str(&text).map_err(|e| SigmfError::Metadata(format!("{}: {e}", path.display())))?;
    if meta.global.datatype != DATATYPE {
        return Err(SigmfError::Datatype(meta.global.datatype));
    }
    if !(meta.global.sample_rate.is_finite() && meta.global.sample_rate > 0.0) {
        return Err(SigmfError::Metadata(format!("bad sample rate {}", meta.global.sample_rate)));
    }
    if !(meta.global.scale.is_finite() && meta.global.scale > 0.0) {
        return Err(SigmfError::Metadata(format!("bad scale {}", meta.global.scale)));
    }
    Ok(meta)
}

#[derive(Debug, Clone)]
pub struct RecordContents {
    pub samples: ComplexBuffer,
    /// Annotations as normalized boxes, in metadata order.
    pub truths: Vec<Truth>,
    pub record: SigmfRecord,
    /// Validation problems that were repaired (edges clamped to the band).
    pub warnings: Vec<String>,
}

/// Read a record and convert its annotations to normalized truth boxes.
pub fn read_record(base: &Path) -> SResult<RecordContents> {
    let (data_path, meta_path) = record_paths(base);
    let meta = read_metadata(&meta_path)?;
    let bytes = fs::read(&data_path).map_err(io_err(&data_path))?;
    if bytes.len() % 4 != 0 {
        let len = bytes.len() as u64;
        return Err(SigmfError::Truncated {
            path: data_path.display().to_string(),
            offset: len - len % 4,
            len,
        });
    }
    let total = (bytes.len() / 4) as u64;
    let samples = decode_samples(&bytes, meta.global.scale);
    let fs_hz = meta.global.sample_rate;
    let mut truths = Vec::with_capacity(meta.annotations.len());
    let mut warnings = Vec::new();
    for (index, a) in meta.annotations.iter().enumerate() {
        let fail = |reason: String| SigmfError::Annotation { index, reason };
        if !(a.freq_lower_edge < a.freq_upper_edge) {
            return Err(fail(format!(
                "lower edge {} Hz not below upper edge {} Hz",
                a.freq_lower_edge, a.freq_upper_edge
            )));
        }
        if a.sample_count == 0 || a.sample_start + a.sample_count > total {
            return Err(fail(format!(
                "samples [{}, {}) outside record of {total}",
                a.sample_start,
                a.sample_start + a.sample_count
            )));
        }
        let (lo, hi) = (a.freq_lower_edge / fs_hz, a.freq_upper_edge / fs_hz);
        let (clo, chi) = (lo.clamp(-0.5, 0.5), hi.clamp(-0.5, 0.5));
        if (clo, chi) != (lo, hi) {
            let w = format!("annotation {index}: edges [{lo}, {hi}] clamped to [-0.5, 0.5]");
            log::warn!("{}: {w}", meta_path.display());
            warnings.push(w);
        }
        if clo >= chi {
            return Err(fail("band lies entirely outside the record".into()));
        }
        let t0 = a.sample_start as f64;
        let bbox = TimeFreqBox::new(t0, t0 + a.sample_count as f64, clo, chi).map_err(|e| fail(e.to_string()))?;
        truths.push(Truth {
            bbox,
            label: a.label.clone(),
        });
    }
    let samples = ComplexBuffer::new(samples, fs_hz).map_err(|e| SigmfError::Metadata(e.to_string()))?;
    Ok(RecordContents {
        samples,
        truths,
        record: SigmfRecord {
            data_path,
            meta_path,
            meta,
        },
        warnings,
    })
}
