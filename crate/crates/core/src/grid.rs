//! Time-frequency geometry shared by the detectors, the scorer and the
//! mask interchange format.
//!
//! A grid cell `(frame, bin)` covers samples `[frame * hop, (frame + 1) * hop]`
//! and normalized frequencies `[-0.5 + bin / bins, -0.5 + (bin + 1) / bins]`.
//! Bins are fftshift ordered.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, ComplexBuffer};
use crate::error::{Error, Result};

pub const DEFAULT_FFT_SIZE: usize = 512;
/// Floor added inside the log and used as the minimum normalization scale.
pub const LOG_FLOOR: f64 = 1e-12;

/// Axis-aligned rectangle in (samples x normalized frequency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct TimeFreqBox {
    t_start: f64,
    t_end: f64,
    f_low: f64,
    f_high: f64,
}

#[derive(Deserialize)]
struct RawBox {
    t_start: f64,
    t_end: f64,
    f_low: f64,
    f_high: f64,
}

impl TryFrom<RawBox> for TimeFreqBox {
    type Error = Error;

    fn try_from(r: RawBox) -> Result<Self> {
        TimeFreqBox::new(r.t_start, r.t_end, r.f_low, r.f_high)
    }
}

impl TimeFreqBox {
    /// Requires ordered, finite bounds with positive area and frequencies in
    /// `[-0.5, 0.5]`.
    pub fn new(t_start: f64, t_end: f64, f_low: f64, f_high: f64) -> Result<Self> {
        let finite = [t_start, t_end, f_low, f_high].iter().all(|v| v.is_finite());
        if !finite || t_start >= t_end || f_low >= f_high {
            return Err(Error::param(format!(
                "box needs t_start < t_end and f_low < f_high, got [{t_start}, {t_end}] x [{f_low}, {f_high}]"
            )));
        }
        if f_low < -0.5 || f_high > 0.5 {
            return Err(Error::param(format!(
                "box frequencies [{f_low}, {f_high}] outside [-0.5, 0.5]"
            )));
        }
        Ok(Self {
            t_start,
            t_end,
            f_low,
            f_high,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn f_low(&self) -> f64 {
        self.f_low
    }

    pub fn f_high(&self) -> f64 {
        self.f_high
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn bandwidth(&self) -> f64 {
        self.f_high - self.f_low
    }

    pub fn area(&self) -> f64 {
        self.duration() * self.bandwidth()
    }

    pub fn intersection_area(&self, other: &TimeFreqBox) -> f64 {
        let dt = self.t_end.min(other.t_end) - self.t_start.max(other.t_start);
        let df = self.f_high.min(other.f_high) - self.f_low.max(other.f_low);
        if dt <= 0.0 || df <= 0.0 {
            0.0
        } else {
            dt * df
        }
    }

    /// True if `other` lies entirely inside `self` (shared edges allowed).
    pub fn contains(&self, other: &TimeFreqBox) -> bool {
        self.t_start <= other.t_start
            && other.t_end <= self.t_end
            && self.f_low <= other.f_low
            && other.f_high <= self.f_high
    }

    /// Smallest box covering both.
    pub fn union(&self, other: &TimeFreqBox) -> TimeFreqBox {
        TimeFreqBox {
            t_start: self.t_start.min(other.t_start),
            t_end: self.t_end.max(other.t_end),
            f_low: self.f_low.min(other.f_low),
            f_high: self.f_high.max(other.f_high),
        }
    }

    pub fn translate(&self, dt: f64, df: f64) -> Result<TimeFreqBox> {
        TimeFreqBox::new(self.t_start + dt, self.t_end + dt, self.f_low + df, self.f_high + df)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub fft_size: usize,
    pub hop: usize,
    pub frames: usize,
    pub bins: usize,
}

impl GridGeometry {
    /// Non-overlapping geometry covering `samples` samples.
    pub fn for_samples(fft_size: usize, samples: usize) -> Result<Self> {
        if fft_size < 2 {
            return Err(Error::param(format!("fft size must be >= 2, got {fft_size}")));
        }
        Ok(Self::with_frames(fft_size, samples / fft_size))
    }

    pub fn with_frames(fft_size: usize, frames: usize) -> Self {
        Self {
            fft_size,
            hop: fft_size,
            frames,
            bins: fft_size,
        }
    }

    pub fn cells(&self) -> usize {
        self.frames * self.bins
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.bins as f64
    }

    /// Samples covered by the grid.
    pub fn extent_samples(&self) -> usize {
        self.frames * self.hop
    }

    pub fn cell_center(&self, frame: usize, bin: usize) -> (f64, f64) {
        (
            (frame as f64 + 0.5) * self.hop as f64,
            -0.5 + (bin as f64 + 0.5) / self.bins as f64,
        )
    }

    pub fn full_extent(&self) -> Result<TimeFreqBox> {
        TimeFreqBox::new(0.0, self.extent_samples() as f64, -0.5, 0.5)
    }

    fn check_cell(&self, frame: usize, bin: usize) -> Result<()> {
        if frame >= self.frames || bin >= self.bins {
            return Err(Error::param(format!(
                "cell ({frame}, {bin}) outside {}x{} grid",
                self.frames, self.bins
            )));
        }
        Ok(())
    }

    /// Inclusive frame and bin ranges whose cell centers fall inside `b`;
    /// `None` when no center does.
    pub fn covered_cells(
        &self,
        b: &TimeFreqBox,
    ) -> Option<(std::ops::RangeInclusive<usize>, std::ops::RangeInclusive<usize>)> {
        let hop = self.hop as f64;
        let bins = self.bins as f64;
        let t_lo = (b.t_start / hop - 0.5).ceil().max(0.0);
        let t_hi = (b.t_end / hop - 0.5).floor().min(self.frames as f64 - 1.0);
        let k_lo = ((b.f_low + 0.5) * bins - 0.5).ceil().max(0.0);
        let k_hi = ((b.f_high + 0.5) * bins - 0.5).floor().min(bins - 1.0);
        if t_lo > t_hi || k_lo > k_hi {
            return None;
        }
        Some((t_lo as usize..=t_hi as usize, k_lo as usize..=k_hi as usize))
    }
}

/// Box spanning exactly cell `(frame, bin)`.
pub fn cell_to_box(frame: usize, bin: usize, geometry: &GridGeometry) -> Result<TimeFreqBox> {
    geometry.check_cell(frame, bin)?;
    let hop = geometry.hop as f64;
    let w = geometry.bin_width();
    TimeFreqBox::new(
        frame as f64 * hop,
        (frame + 1) as f64 * hop,
        -0.5 + bin as f64 * w,
        -0.5 + (bin + 1) as f64 * w,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

/// Normalized log-magnitude spectrogram, row-major `frames x bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    values: Vec<f64>,
    geometry: GridGeometry,
    mean: f64,
    std: f64,
}

impl SpectralGrid {
    /// Normalize raw `ln(|X| + floor)` values by their own mean and standard
    /// deviation.
    pub fn from_log_magnitude(mut values: Vec<f64>, geometry: GridGeometry) -> Result<Self> {
        if values.len() != geometry.cells() {
            return Err(Error::Invariant(format!(
                "{} values for a {}x{} grid",
                values.len(),
                geometry.frames,
                geometry.bins
            )));
        }
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mut std = var.sqrt();
        if std <= 1e-9 * mean.abs().max(1.0) {
            // Constant input; the residue is rounding in the mean.
            std = 0.0;
            values.iter_mut().for_each(|v| *v = 0.0);
        } else {
            values.iter_mut().for_each(|v| *v = (*v - mean) / std);
        }
        Ok(Self {
            values,
            geometry,
            mean,
            std,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// `(mean, std)` of the raw log-magnitudes used for normalization.
    pub fn norm_stats(&self) -> (f64, f64) {
        (self.mean, self.std)
    }

    pub fn value(&self, frame: usize, bin: usize) -> f64 {
        self.values[frame * self.geometry.bins + bin]
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        let b = self.geometry.bins;
        &self.values[frame * b..(frame + 1) * b]
    }

    fn scale(&self) -> f64 {
        self.std.max(LOG_FLOOR)
    }

    /// Normalized-grid units for a power ratio in dB.
    pub fn db_to_units(&self, db: f64) -> f64 {
        // 20 log10 |X| = db  <=>  ln |X| = db * ln(10) / 20
        db * std::f64::consts::LN_10 / 20.0 / self.scale()
    }

    /// Linear power `|X|^2` recovered from the normalized values.
    pub fn cell_power(&self, frame: usize, bin: usize) -> f64 {
        let m = (self.value(frame, bin) * self.scale() + self.mean).exp();
        m * m
    }

    /// Moving average of cell power over a `frames x bins` window centered
    /// on each cell (truncated at the edges), mapped back to the same
    /// normalized units. A window of 1x1 returns the grid unchanged.
    pub fn integrate(&self, frames: usize, bins: usize) -> SpectralGrid {
        let frames = frames.max(1);
        let bins = bins.max(1);
        if frames == 1 && bins == 1 {
            return self.clone();
        }
        let g = self.geometry;
        let power: Vec<f64> = (0..g.frames)
            .flat_map(|t| (0..g.bins).map(move |k| (t, k)))
            .map(|(t, k)| self.cell_power(t, k))
            .collect();
        // Separable box sums via prefix sums: along bins, then along frames.
        let rb = bins / 2;
        let rt = frames / 2;
        let mut along_bins = vec![0.0; power.len()];
        let mut prefix = vec![0.0; g.bins + 1];
        for t in 0..g.frames {
            let row = &power[t * g.bins..(t + 1) * g.bins];
            for k in 0..g.bins {
                prefix[k + 1] = prefix[k] + row[k];
            }
            for k in 0..g.bins {
                let lo = k.saturating_sub(rb);
                let hi = (k + bins - rb).min(g.bins);
                along_bins[t * g.bins + k] = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
            }
        }
        let mut out = vec![0.0; power.len()];
        let mut col = vec![0.0; g.frames + 1];
        for k in 0..g.bins {
            for t in 0..g.frames {
                col[t + 1] = col[t] + along_bins[t * g.bins + k];
            }
            for t in 0..g.frames {
                let lo = t.saturating_sub(rt);
                let hi = (t + frames - rt).min(g.frames);
                let p = (col[hi] - col[lo]) / (hi - lo) as f64;
                out[t * g.bins + k] = (0.5 * p.max(0.0).ln() - self.mean) / self.scale();
            }
        }
        SpectralGrid {
            values: out,
            geometry: g,
            mean: self.mean,
            std: self.std,
        }
    }
}

/// Raw `|X|^2` per cell, row-major.
pub fn power_grid(buf: &ComplexBuffer, fft_size: usize, window: Window) -> Result<(Vec<f64>, GridGeometry)> {
    let geometry = GridGeometry::for_samples(fft_size, buf.len())?;
    let mut out = Vec::with_capacity(geometry.cells());
    match window {
        Window::Rectangular => {
            dsp::for_each_dft_frame(buf.samples(), fft_size, |_, frame| {
                out.extend(frame.iter().map(|z| z.norm_sqr()));
            })?;
        }
        Window::Hann => {
            let w: Vec<f64> = (0..fft_size)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / fft_size as f64).cos())
                .collect();
            let windowed: Vec<Complex64> = buf
                .samples()
                .chunks_exact(fft_size)
                .flat_map(|c| c.iter().zip(&w).map(|(z, &wi)| z * wi))
                .collect();
            dsp::for_each_dft_frame(&windowed, fft_size, |_, frame| {
                out.extend(frame.iter().map(|z| z.norm_sqr()));
            })?;
        }
    }
    Ok((out, geometry))
}

/// Normalized log-magnitude spectrogram with no window and no overlap.
pub fn spectrogram(buf: &ComplexBuffer, fft_size: usize) -> Result<SpectralGrid> {
    spectrogram_with(buf, fft_size, Window::Rectangular)
}

pub fn spectrogram_with(buf: &ComplexBuffer, fft_size: usize, window: Window) -> Result<SpectralGrid> {
    let (power, geometry) = power_grid(buf, fft_size, window)?;
    let values = power.into_iter().map(|p| (p.sqrt() + LOG_FLOOR).ln()).collect();
    SpectralGrid::from_log_magnitude(values, geometry)
}

/// Per-cell signal/no-signal mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    geometry: GridGeometry,
    cells: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            cells: vec![false; geometry.cells()],
        }
    }

    pub fn from_cells(geometry: GridGeometry, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != geometry.cells() {
            return Err(Error::Invariant(format!(
                "mask has {} cells, geometry needs {}",
                cells.len(),
                geometry.cells()
            )));
        }
        Ok(Self { geometry, cells })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, frame: usize, bin: usize) -> bool {
        self.cells[frame * self.geometry.bins + bin]
    }

    pub fn set(&mut self, frame: usize, bin: usize, value: bool) {
        let b = self.geometry.bins;
        self.cells[frame * b + bin] = value;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// True if every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.cells.len() == other.cells.len()
            && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }
}

/// Mark every cell whose center lies inside (or on the edge of) any box.
pub fn rasterize(boxes: &[TimeFreqBox], geometry: &GridGeometry) -> BinaryMask {
    let mut mask = BinaryMask::new(*geometry);
    for b in boxes {
        if let Some((frames, bins)) = geometry.covered_cells(b) {
            for t in frames {
                for k in bins.clone() {
                    mask.set(t, k, true);
                }
            }
        }
    }
    mask
}

pub const MASK_MAGIC: &[u8; 8] = b"WBMASK01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskTrailer {
    pub geometry: GridGeometry,
    pub bit_order: String,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

/// Serialize a mask: magic, frames and bins as u32 LE, MSB-first packed
/// cells in row-major order, then a UTF-8 JSON trailer.
pub fn encode_mask(mask: &BinaryMask, provenance: serde_json::Value) -> Result<Vec<u8>> {
    let g = mask.geometry();
    let frames = u32::try_from(g.frames).map_err(|_| Error::MaskFormat("too many frames".into()))?;
    let bins = u32::try_from(g.bins).map_err(|_| Error::MaskFormat("too many bins".into()))?;
    let mut out = Vec::with_capacity(16 + g.cells().div_ceil(8) + 128);
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&frames.to_le_bytes());
    out.extend_from_slice(&bins.to_le_bytes());
    for chunk in mask.cells().chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (i, &c)| if c { acc | (0x80 >> i) } else { acc });
        out.push(byte);
    }
    let trailer = MaskTrailer {
        geometry: *g,
        bit_order: "msb-first".into(),
        provenance,
    };
    out.extend_from_slice(&serde_json::to_vec(&trailer)?);
    Ok(out)
}

pub fn decode_mask(bytes: &[u8]) -> Result<(BinaryMask, MaskTrailer)> {
    if bytes.len() < 16 || &bytes[..8] != MASK_MAGIC {
        return Err(Error::MaskFormat("missing WBMASK01 header".into()));
    }
    let frames = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let bins = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let n = frames
        .checked_mul(bins)
        .ok_or_else(|| Error::MaskFormat("header dimensions overflow".into()))?;
    let packed = n.div_ceil(8);
    if bytes.len() < 16 + packed {
        return Err(Error::MaskFormat(format!(
            "payload truncated: need {packed} bytes after header, have {}",
            bytes.len() - 16
        )));
    }
    let payload = &bytes[16..16 + packed];
    let cells = (0..n).map(|i| payload[i / 8] & (0x80 >> (i % 8)) != 0).collect();
    let trailer: MaskTrailer = serde_json::from_slice(&bytes[16 + packed..])
        .map_err(|e| Error::MaskFormat(format!("bad trailer: {e}")))?;
    if trailer.geometry.frames != frames || trailer.geometry.bins != bins {
        return Err(Error::MaskFormat(format!(
            "trailer geometry {}x{} disagrees with header {frames}x{bins}",
            trailer.geometry.frames, trailer.geometry.bins
        )));
    }
    let mask = BinaryMask::from_cells(trailer.geometry, cells)?;
    Ok((mask, trailer))
}

pub fn write_mask(path: &Path, mask: &BinaryMask, provenance: serde_json::Value) -> Result<()> {
    let bytes = encode_mask(mask, provenance)?;
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

pub fn read_mask(path: &Path) -> Result<(BinaryMask, MaskTrailer)> {
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_mask(&bytes)
}
