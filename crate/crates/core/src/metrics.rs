//! IoU matching of detections against ground truth and precision / recall /
//! F1 reports.
//!
//! Conventions: precision is 1 when there are no detections, recall is 1
//! when there are no truths, and F1 is 0 when precision and recall are both
//! 0.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::detect::Detection;
use crate::error::{Error, Result};
use crate::grid::TimeFreqBox;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// A labelled ground-truth box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    #[serde(flatten)]
    pub bbox: TimeFreqBox,
    pub label: String,
}

pub fn iou(a: &TimeFreqBox, b: &TimeFreqBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    (inter / (a.area() + b.area() - inter)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub detection: usize,
    pub truth: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_truths: Vec<usize>,
    pub iou_threshold: f64,
}

impl MatchResult {
    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.pairs.len(),
            fp: self.unmatched_detections.len(),
            fn_: self.unmatched_truths.len(),
        }
    }
}

/// Greedy one-to-one matching.
///
/// Candidate pairs with IoU at or above the threshold (and equal labels in
/// class-aware mode) are taken in order of IoU, then detection score, then
/// detection index, then truth index; a pair is accepted when both sides
/// are still free.
pub fn match_detections(
    dets: &[Detection],
    truths: &[Truth],
    iou_threshold: f64,
    class_aware: bool,
) -> Result<MatchResult> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::param(format!("IoU threshold must be in (0, 1], got {iou_threshold}")));
    }
    let mut candidates = Vec::new();
    for (d, det) in dets.iter().enumerate() {
        for (t, truth) in truths.iter().enumerate() {
            if class_aware && det.label.as_deref() != Some(truth.label.as_str()) {
                continue;
            }
            let v = iou(&det.bbox, &truth.bbox);
            if v >= iou_threshold {
                candidates.push(MatchPair {
                    detection: d,
                    truth: t,
                    iou: v,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then_with(|| dets[b.detection].score.total_cmp(&dets[a.detection].score))
            .then_with(|| a.detection.cmp(&b.detection))
            .then_with(|| a.truth.cmp(&b.truth))
    });
    let mut det_used = vec![false; dets.len()];
    let mut truth_used = vec![false; truths.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !det_used[c.detection] && !truth_used[c.truth] {
            det_used[c.detection] = true;
            truth_used[c.truth] = true;
            pairs.push(c);
        }
    }
    Ok(MatchResult {
        pairs,
        unmatched_detections: (0..dets.len()).filter(|&i| !det_used[i]).collect(),
        unmatched_truths: (0..truths.len()).filter(|&i| !truth_used[i]).collect(),
        iou_threshold,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, fp, fn_ }
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

/// Harmonic mean, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub snr_db: Option<f64>,
    pub iou_threshold: f64,
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreRow {
    pub fn new(snr_db: Option<f64>, iou_threshold: f64, counts: Counts) -> Self {
        Self {
            snr_db,
            iou_threshold,
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub class_aware: bool,
    /// Sorted by SNR, then IoU threshold.
    pub rows: Vec<ScoreRow>,
    /// Means over `rows`.
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
}

impl ScoreReport {
    pub fn from_rows(mut rows: Vec<ScoreRow>, class_aware: bool) -> Self {
        rows.sort_by(|a, b| {
            cmp_snr(a.snr_db, b.snr_db).then_with(|| a.iou_threshold.total_cmp(&b.iou_threshold))
        });
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&ScoreRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Self {
            class_aware,
            mean_precision: mean(|r| r.precision),
            mean_recall: mean(|r| r.recall),
            mean_f1: mean(|r| r.f1),
            rows,
        }
    }

    /// Row for a threshold (and SNR, if the report has SNR rows).
    pub fn row(&self, snr_db: Option<f64>, iou_threshold: f64) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| {
            cmp_snr(r.snr_db, snr_db) == Ordering::Equal && (r.iou_threshold - iou_threshold).abs() < 1e-9
        })
    }

    /// CSV with header `snr_db,iou_threshold,precision,recall,f1,tp,fp,fn`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,iou_threshold,precision,recall,f1,tp,fp,fn\n");
        for r in &self.rows {
            let snr = r.snr_db.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{snr},{},{:.6},{:.6},{:.6},{},{},{}",
                r.iou_threshold, r.precision, r.recall, r.f1, r.counts.tp, r.counts.fp, r.counts.fn_
            );
        }
        s
    }
}

fn cmp_snr(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

/// Single-row report for one match.
pub fn score(m: &MatchResult, class_aware: bool) -> ScoreReport {
    ScoreReport::from_rows(vec![ScoreRow::new(None, m.iou_threshold, m.counts())], class_aware)
}

/// One row per threshold, plus the means over thresholds.
pub fn sweep_score(
    dets: &[Detection],
    truths: &[Truth],
    thresholds: &[f64],
    class_aware: bool,
) -> Result<ScoreReport> {
    let mut acc = ScoreAccumulator::new(thresholds.to_vec(), class_aware)?;
    acc.add(None, dets, truths)?;
    Ok(acc.report())
}

/// Counts summed over records, keyed by SNR point and IoU threshold.
#[derive(Debug, Clone)]
pub struct ScoreAccumulator {
    thresholds: Vec<f64>,
    class_aware: bool,
    counts: BTreeMap<(Option<u64>, u64), Counts>,
}

impl ScoreAccumulator {
    pub fn new(thresholds: Vec<f64>, class_aware: bool) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::param("at least one IoU threshold is required"));
        }
        if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::param(format!("IoU threshold must be in (0, 1], got {t}")));
        }
        Ok(Self {
            thresholds,
            class_aware,
            counts: BTreeMap::new(),
        })
    }

    pub fn add(&mut self, snr_db: Option<f64>, dets: &[Detection], truths: &[Truth]) -> Result<()> {
        for &t in &self.thresholds {
            let m = match_detections(dets, truths, t, self.class_aware)?;
            *self.counts.entry((snr_db.map(f64::to_bits), t.to_bits())).or_default() += m.counts();
        }
        Ok(())
    }

    pub fn merge(&mut self, other: ScoreAccumulator) {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_default() += c;
        }
    }

    pub fn report(&self) -> ScoreReport {
        let rows = self
            .counts
            .iter()
            .map(|(&(snr, t), &c)| ScoreRow::new(snr.map(f64::from_bits), f64::from_bits(t), c))
            .collect();
        ScoreReport::from_rows(rows, self.class_aware)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(t0: f64, t1: f64, f0: f64, f1: f64) -> TimeFreqBox {
        TimeFreqBox::new(t0, t1, f0, f1).unwrap()
    }

    fn truth(bx: TimeFreqBox) -> Truth {
        Truth {
            bbox: bx,
            label: "PSK4".into(),
        }
    }

    #[test]
    fn iou_examples() {
        let a = b(0.0, 10.0, 0.0, 0.1);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(20.0, 30.0, 0.0, 0.1)), 0.0);
        let shifted = b(5.0, 15.0, 0.0, 0.1);
        assert!((iou(&a, &shifted) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_detections() {
        let m = match_detections(&[], &[truth(b(0.0, 1.0, 0.0, 0.1))], 0.5, false).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_truths, vec![0]);
        let r = score(&m, false);
        assert_eq!(r.rows[0].precision, 1.0);
        assert_eq!(r.rows[0].recall, 0.0);
        assert_eq!(r.rows[0].f1, 0.0);
    }

    #[test]
    fn exact_detection_matches() {
        let bx = b(0.0, 1.0, 0.0, 0.1);
        let m = match_detections(&[Detection::new(bx, 0.0)], &[truth(bx)], 0.5, false).unwrap();
        assert_eq!(m.pairs, vec![MatchPair { detection: 0, truth: 0, iou: 1.0 }]);
    }

    #[test]
    fn class_aware_requires_label() {
        let bx = b(0.0, 1.0, 0.0, 0.1);
        let mut d = Detection::new(bx, 0.0);
        assert!(match_detections(&[d.clone()], &[truth(bx)], 0.5, true).unwrap().pairs.is_empty());
        d.label = Some("PSK4".into());
        assert_eq!(match_detections(&[d.clone()], &[truth(bx)], 0.5, true).unwrap().pairs.len(), 1);
        d.label = Some("QAM16".into());
        assert!(match_detections(&[d], &[truth(bx)], 0.5, true).unwrap().pairs.is_empty());
    }

    #[test]
    fn score_breaks_iou_ties() {
        let bx = b(0.0, 1.0, 0.0, 0.1);
        let mut lo = Detection::new(bx, 1.0);
        let hi = Detection::new(bx, 2.0);
        lo.label = None;
        let m = match_detections(&[lo, hi], &[truth(bx)], 0.5, false).unwrap();
        assert_eq!(m.pairs[0].detection, 1);
    }

    #[test]
    fn hand_counted_ratios() {
        let c = Counts::new(8, 4, 2);
        assert!((c.precision() - 8.0 / 12.0).abs() < 1e-12);
        assert!((c.recall() - 0.8).abs() < 1e-12);
        assert!((c.f1() - 0.727_272_727_272_727_3).abs() < 1e-12);
    }

    #[test]
    fn threshold_range_checked() {
        assert!(match_detections(&[], &[], 0.0, false).is_err());
        assert!(match_detections(&[], &[], 1.01, false).is_err());
        assert!(match_detections(&[], &[], 1.0, false).is_ok());
        assert!(ScoreAccumulator::new(vec![], false).is_err());
    }

    #[test]
    fn coco_grid() {
        let t = coco_thresholds();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], 0.5);
        assert_eq!(t[9], 0.95);
    }

    #[test]
    fn csv_layout() {
        let r = ScoreReport::from_rows(
            vec![
                ScoreRow::new(Some(10.0), 0.5, Counts::new(1, 1, 0)),
                ScoreRow::new(Some(-5.0), 0.5, Counts::new(0, 0, 1)),
            ],
            false,
        );
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "snr_db,iou_threshold,precision,recall,f1,tp,fp,fn");
        assert_eq!(lines[1], "-5,0.5,1.000000,0.000000,0.000000,0,0,1");
        assert_eq!(lines[2], "10,0.5,0.500000,1.000000,0.666667,1,1,0");
    }
}
