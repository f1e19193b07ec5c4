//! Baseline recognizers: a channelized radiometer on the spectral grid,
//! connected-components clustering and the small-detection / containment
//! post-filters.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::ComplexBuffer;
use crate::error::{Error, Result};
use crate::grid::{self, BinaryMask, SpectralGrid, TimeFreqBox, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(flatten)]
    pub bbox: TimeFreqBox,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Size of the originating cluster, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

impl Detection {
    pub fn new(bbox: TimeFreqBox, score: f64) -> Self {
        Self {
            bbox,
            score,
            label: None,
            cells: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `threshold` is in dB above the estimated noise floor.
    NoiseRelative,
    /// `threshold` is in normalized grid units.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::param(format!("connectivity must be 4 or 8, got {v}"))),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Clustering {
    ConnectedComponents,
    /// DBSCAN over set cells with a Chebyshev neighbourhood of `eps` cells.
    Density { eps: usize, min_pts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub fft_size: usize,
    /// Analysis window of the detector's own spectrogram.
    pub window: Window,
    /// Power averaging window `[frames, bins]` applied before thresholding.
    pub integration: [usize; 2],
    pub threshold_mode: ThresholdMode,
    pub threshold: f64,
    pub connectivity: Connectivity,
    pub clustering: Clustering,
    pub min_cluster_cells: usize,
    pub merge_contained: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            fft_size: grid::DEFAULT_FFT_SIZE,
            window: Window::Hann,
            integration: [5, 3],
            threshold_mode: ThresholdMode::NoiseRelative,
            threshold: 6.0,
            connectivity: Connectivity::Eight,
            clustering: Clustering::ConnectedComponents,
            min_cluster_cells: 2,
            merge_contained: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() {
            return Err(Error::param("threshold must not be NaN"));
        }
        if self.min_cluster_cells < 1 {
            return Err(Error::param("min_cluster_cells must be >= 1"));
        }
        if self.fft_size < 2 {
            return Err(Error::param("fft_size must be >= 2"));
        }
        if let Clustering::Density { eps, min_pts } = self.clustering {
            if eps < 1 || min_pts < 1 {
                return Err(Error::param("density clustering needs eps >= 1 and min_pts >= 1"));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let cfg: DetectorConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Cells more than this many dB above the running estimate are left out of
/// the floor.
pub const FLOOR_CLIP_DB: f64 = 15.0;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().cloned().fold(f64::MIN, f64::max);
        0.5 * (lower + upper)
    }
}

/// Clipped median: the median of all cells, recomputed over the cells no
/// more than [`FLOOR_CLIP_DB`] above it until it settles. Strong signal
/// cells then no longer pull the estimate up.
pub fn estimate_noise_floor(grid: &SpectralGrid) -> f64 {
    let values = grid.values();
    let clip = grid.db_to_units(FLOOR_CLIP_DB);
    let mut floor = median(values.to_vec());
    for _ in 0..16 {
        let kept: Vec<f64> = values.iter().cloned().filter(|&v| v <= floor + clip).collect();
        let next = median(kept);
        if next == floor {
            break;
        }
        floor = next;
    }
    floor
}

pub fn threshold_mask(grid: &SpectralGrid, config: &DetectorConfig) -> BinaryMask {
    let level = match config.threshold_mode {
        ThresholdMode::Absolute => config.threshold,
        ThresholdMode::NoiseRelative => estimate_noise_floor(grid) + grid.db_to_units(config.threshold),
    };
    let cells = grid.values().iter().map(|&v| v > level).collect();
    BinaryMask::from_cells(*grid.geometry(), cells).expect("same geometry")
}

/// Cells `(frame, bin)` of one cluster in raster order.
pub type Cluster = Vec<(usize, usize)>;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        // Keep the raster-earliest root so labels follow first appearance.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

/// Maximal connected clusters of set cells, two-pass union-find labelling.
///
/// Clusters are ordered by their raster-first cell and cells within a
/// cluster are in raster order.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<Cluster> {
    let g = mask.geometry();
    let (frames, bins) = (g.frames, g.bins);
    let cells = mask.cells();
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    for t in 0..frames {
        for k in 0..bins {
            let i = t * bins + k;
            if !cells[i] {
                continue;
            }
            if k > 0 && cells[i - 1] {
                union(&mut parent, i, i - 1);
            }
            if t > 0 {
                let up = i - bins;
                if cells[up] {
                    union(&mut parent, i, up);
                }
                if connectivity == Connectivity::Eight {
                    if k > 0 && cells[up - 1] {
                        union(&mut parent, i, up - 1);
                    }
                    if k + 1 < bins && cells[up + 1] {
                        union(&mut parent, i, up + 1);
                    }
                }
            }
        }
    }
    collect_by_root(cells.len(), bins, |i| cells[i].then(|| find(&mut parent, i)))
}

fn collect_by_root(n: usize, bins: usize, mut root_of: impl FnMut(usize) -> Option<usize>) -> Vec<Cluster> {
    let mut slot = vec![usize::MAX; n];
    let mut clusters: Vec<Cluster> = Vec::new();
    for i in 0..n {
        if let Some(r) = root_of(i) {
            if slot[r] == usize::MAX {
                slot[r] = clusters.len();
                clusters.push(Vec::new());
            }
            clusters[slot[r]].push((i / bins, i % bins));
        }
    }
    clusters
}

/// DBSCAN on set cells: core cells have at least `min_pts` set cells
/// (themselves included) within Chebyshev distance `eps`; clusters grow
/// through core cells and absorb their border cells. Isolated cells are
/// dropped as noise.
pub fn density_clusters(mask: &BinaryMask, eps: usize, min_pts: usize) -> Vec<Cluster> {
    let g = mask.geometry();
    let (frames, bins) = (g.frames, g.bins);
    let cells = mask.cells();
    let neighbours = |i: usize| {
        let (t, k) = (i / bins, i % bins);
        let t0 = t.saturating_sub(eps);
        let t1 = (t + eps).min(frames.saturating_sub(1));
        let k0 = k.saturating_sub(eps);
        let k1 = (k + eps).min(bins.saturating_sub(1));
        (t0..=t1).flat_map(move |tt| (k0..=k1).map(move |kk| tt * bins + kk))
    };
    let core: Vec<bool> = (0..cells.len())
        .map(|i| cells[i] && neighbours(i).filter(|&j| cells[j]).count() >= min_pts)
        .collect();
    let mut label = vec![usize::MAX; cells.len()];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for seed in 0..cells.len() {
        if !core[seed] || label[seed] != usize::MAX {
            continue;
        }
        label[seed] = next;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            for j in neighbours(i) {
                if cells[j] && label[j] == usize::MAX {
                    label[j] = next;
                    if core[j] {
                        queue.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    // Clusters are numbered by their first core cell; reorder by first cell.
    collect_by_root(cells.len(), bins, |i| (label[i] != usize::MAX).then_some(label[i]))
}

/// Cluster extremes as boxes; score is the mean grid value over the cluster.
pub fn clusters_to_detections(clusters: &[Cluster], grid: &SpectralGrid) -> Vec<Detection> {
    let g = grid.geometry();
    clusters
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let bbox = cluster_box(c, g);
            let score = c.iter().map(|&(t, k)| grid.value(t, k)).sum::<f64>() / c.len() as f64;
            Detection {
                bbox,
                score,
                label: None,
                cells: Some(c.len()),
            }
        })
        .collect()
}

fn cluster_box(cluster: &Cluster, g: &grid::GridGeometry) -> TimeFreqBox {
    let t0 = cluster.iter().map(|c| c.0).min().unwrap_or(0);
    let t1 = cluster.iter().map(|c| c.0).max().unwrap_or(0);
    let k0 = cluster.iter().map(|c| c.1).min().unwrap_or(0);
    let k1 = cluster.iter().map(|c| c.1).max().unwrap_or(0);
    let first = grid::cell_to_box(t0, k0, g).expect("cluster cell inside grid");
    let last = grid::cell_to_box(t1, k1, g).expect("cluster cell inside grid");
    first.union(&last)
}

/// Drop detections from clusters smaller than `min_cluster_cells`, then,
/// if `merge_contained`, drop every detection whose box lies inside another
/// detection's box. Of identical boxes the first is kept.
pub fn post_filter(dets: Vec<Detection>, config: &DetectorConfig) -> Vec<Detection> {
    let kept: Vec<Detection> = dets
        .into_iter()
        .filter(|d| d.cells.is_none_or(|n| n >= config.min_cluster_cells))
        .collect();
    if !config.merge_contained {
        return kept;
    }
    let inside: Vec<bool> = (0..kept.len())
        .map(|i| {
            kept.iter().enumerate().any(|(j, outer)| {
                j != i && outer.bbox.contains(&kept[i].bbox) && (outer.bbox != kept[i].bbox || j < i)
            })
        })
        .collect();
    kept.into_iter()
        .zip(inside)
        .filter_map(|(d, drop)| (!drop).then_some(d))
        .collect()
}

fn cluster(mask: &BinaryMask, config: &DetectorConfig) -> Vec<Cluster> {
    match config.clustering {
        Clustering::ConnectedComponents => connected_components(mask, config.connectivity),
        Clustering::Density { eps, min_pts } => density_clusters(mask, eps, min_pts),
    }
}

/// Energy detection per grid cell followed by clustering and post-filters.
pub fn channelized_radiometer(buf: &ComplexBuffer, config: &DetectorConfig) -> Result<Vec<Detection>> {
    config.validate()?;
    Ok(radiometer_on_grid(&detector_grid(buf, config)?, config))
}

/// The spectrogram the radiometer thresholds: the standard grid geometry
/// with the configured window.
pub fn detector_grid(buf: &ComplexBuffer, config: &DetectorConfig) -> Result<SpectralGrid> {
    grid::spectrogram_with(buf, config.fft_size, config.window)
}

pub fn radiometer_on_grid(grid: &SpectralGrid, config: &DetectorConfig) -> Vec<Detection> {
    let [tf, tb] = config.integration;
    let stat = grid.integrate(tf, tb);
    let mask = threshold_mask(&stat, config);
    let clusters = cluster(&mask, config);
    post_filter(clusters_to_detections(&clusters, &stat), config)
}

/// Detections from an externally produced mask. Scores come from `grid`
/// when given, otherwise every detection scores 1.
pub fn detections_from_mask(
    mask: &BinaryMask,
    grid: Option<&SpectralGrid>,
    config: &DetectorConfig,
) -> Result<Vec<Detection>> {
    if let Some(g) = grid {
        let (a, b) = (g.geometry(), mask.geometry());
        if a.frames != b.frames || a.bins != b.bins {
            return Err(Error::GeometryMismatch {
                expected_frames: a.frames,
                expected_bins: a.bins,
                frames: b.frames,
                bins: b.bins,
            });
        }
    }
    let clusters = cluster(mask, config);
    let dets = match grid {
        Some(g) => clusters_to_detections(&clusters, g),
        None => clusters
            .iter()
            .map(|c| Detection {
                bbox: cluster_box(c, mask.geometry()),
                score: 1.0,
                label: None,
                cells: Some(c.len()),
            })
            .collect(),
    };
    Ok(post_filter(dets, config))
}

/// One JSON object per line.
pub fn write_detections(path: &Path, dets: &[Detection]) -> Result<()> {
    let mut out = Vec::new();
    for d in dets {
        serde_json::to_writer(&mut out, d)?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::file(path, e))?;
    f.write_all(&out).map_err(|e| Error::file(path, e))
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let f = fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut dets = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let d: Detection = serde_json::from_str(&line)?;
        if !d.score.is_finite() {
            return Err(Error::param("detection score must be finite"));
        }
        dets.push(d);
    }
    Ok(dets)
}
