//! Detection scoring: IoU matching, easy-difficulty filtering and average
//! precision over confidence-ranked detections.
//!
//! Ground truth boxes failing the difficulty filter, boxes of the neighbouring
//! class (`Van` for `Car`) and `DontCare` regions are "ignored": a detection
//! that only overlaps them counts neither for nor against the detector.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::annotator::{read_kitti_labels, Annotation};
use crate::config::EvalParams;
use crate::error::{Error, Result};

pub type BBox = [f64; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub image_id: String,
    pub class_name: String,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLabel {
    TruePositive,
    FalsePositive,
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    AllPoint,
    ElevenPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub average_precision: f64,
    pub interpolation: Interpolation,
    /// `(recall, precision)` after each ranked, non-ignored detection.
    pub curve: Vec<(f64, f64)>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub ignored_detections: usize,
    pub gt_evaluated: usize,
    pub gt_ignored: usize,
}

/// Intersection over union of continuous boxes; 0 if either has no area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let area = |x: &BBox| (x[2] - x[0]) * (x[3] - x[1]);
    let (aa, ab) = (area(a), area(b));
    if !(aa > 0.0) || !(ab > 0.0) {
        return 0.0;
    }
    let iw = a[2].min(b[2]) - a[0].max(b[0]);
    let ih = a[3].min(b[3]) - a[1].max(b[1]);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (aa + ab - inter)
}

/// Easy difficulty: taller than the height limit and truncated below the limit.
pub fn easy_filter(gt: &Annotation, params: &EvalParams) -> bool {
    gt.height() > params.min_box_height_px && gt.truncated < params.max_truncation
}

/// Ground truth of one image split for matching.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthSet {
    pub evaluated: Vec<BBox>,
    pub ignored: Vec<BBox>,
}

fn neighbour_class(class: &str) -> Option<&'static str> {
    match class {
        "Car" => Some("Van"),
        "Pedestrian" => Some("Person_sitting"),
        _ => None,
    }
}

impl GroundTruthSet {
    pub fn from_annotations(gts: &[Annotation], class: &str, params: &EvalParams) -> Self {
        let mut set = Self::default();
        for gt in gts {
            if gt.class_name == class {
                if easy_filter(gt, params) {
                    set.evaluated.push(gt.bbox);
                } else {
                    set.ignored.push(gt.bbox);
                }
            } else if gt.class_name == "DontCare" || neighbour_class(class) == Some(gt.class_name.as_str()) {
                set.ignored.push(gt.bbox);
            }
        }
        set
    }
}

/// Labels one image's detections. Returns labels in input order.
pub fn match_detections(dets: &[(BBox, f64)], gt: &GroundTruthSet, iou_threshold: f64) -> Vec<MatchLabel> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].1.total_cmp(&dets[a].1));
    let mut taken = vec![false; gt.evaluated.len()];
    let mut labels = vec![MatchLabel::FalsePositive; dets.len()];
    for i in order {
        let bbox = &dets[i].0;
        let mut best: Option<(usize, f64)> = None;
        for (g, gb) in gt.evaluated.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let o = iou(bbox, gb);
            if best.is_none_or(|(_, bo)| o > bo) {
                best = Some((g, o));
            }
        }
        if let Some((g, o)) = best {
            if o >= iou_threshold {
                taken[g] = true;
                labels[i] = MatchLabel::TruePositive;
                continue;
            }
        }
        let best_ignored = gt.ignored.iter().map(|g| iou(bbox, g)).fold(0.0, f64::max);
        if best_ignored >= iou_threshold {
            labels[i] = MatchLabel::Ignored;
        }
    }
    labels
}

/// Sweeps `(confidence, label)` pairs in descending confidence, ties in
/// input order, and integrates the precision envelope.
pub fn average_precision(labeled: &[(f64, MatchLabel)], n_evaluated_gt: usize, interpolation: Interpolation) -> EvalReport {
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.sort_by(|&a, &b| labeled[b].0.total_cmp(&labeled[a].0));
    let (mut tp, mut fp, mut ignored) = (0usize, 0usize, 0usize);
    let mut curve = Vec::new();
    for i in order {
        match labeled[i].1 {
            MatchLabel::TruePositive => tp += 1,
            MatchLabel::FalsePositive => fp += 1,
            MatchLabel::Ignored => {
                ignored += 1;
                continue;
            }
        }
        if n_evaluated_gt > 0 {
            curve.push((tp as f64 / n_evaluated_gt as f64, tp as f64 / (tp + fp) as f64));
        }
    }
    let average_precision = match interpolation {
        Interpolation::AllPoint => all_point_ap(&curve),
        Interpolation::ElevenPoint => eleven_point_ap(&curve),
    };
    EvalReport {
        average_precision,
        interpolation,
        curve,
        true_positives: tp,
        false_positives: fp,
        ignored_detections: ignored,
        gt_evaluated: n_evaluated_gt,
        gt_ignored: 0,
    }
}

fn all_point_ap(curve: &[(f64, f64)]) -> f64 {
    let mut envelope: Vec<f64> = curve.iter().map(|p| p.1).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (&(r, _), &p) in curve.iter().zip(&envelope) {
        ap += (r - prev_recall) * p;
        prev_recall = r;
    }
    ap
}

fn eleven_point_ap(curve: &[(f64, f64)]) -> f64 {
    (0..=10)
        .map(|k| {
            let t = k as f64 / 10.0;
            curve.iter().filter(|p| p.0 >= t - 1e-12).map(|p| p.1).fold(0.0, f64::max)
        })
        .sum::<f64>()
        / 11.0
}

/// Matches every image and computes AP over the merged ranking.
/// Images are visited in key order; within an image, input order breaks ties.
pub fn evaluate(
    gts: &BTreeMap<String, Vec<Annotation>>,
    dets: &BTreeMap<String, Vec<DetectionRecord>>,
    class: &str,
    params: &EvalParams,
    interpolation: Interpolation,
) -> EvalReport {
    let mut labeled = Vec::new();
    let (mut n_eval, mut n_ignored) = (0, 0);
    let empty = Vec::new();
    let mut ids: Vec<&String> = gts.keys().chain(dets.keys()).collect();
    ids.sort();
    ids.dedup();
    for id in ids {
        let set = GroundTruthSet::from_annotations(gts.get(id).unwrap_or(&empty), class, params);
        n_eval += set.evaluated.len();
        n_ignored += set.ignored.len();
        let image_dets: Vec<(BBox, f64)> = dets
            .get(id)
            .into_iter()
            .flatten()
            .filter(|d| d.class_name == class)
            .map(|d| (d.bbox, d.confidence))
            .collect();
        let labels = match_detections(&image_dets, &set, params.iou_threshold);
        labeled.extend(image_dets.iter().zip(labels).map(|(d, l)| (d.1, l)));
    }
    let mut report = average_precision(&labeled, n_eval, interpolation);
    report.gt_ignored = n_ignored;
    report
}

fn label_files(dir: &Path) -> Result<BTreeMap<String, std::path::PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Reads a KITTI label directory keyed by file stem.
pub fn read_label_dir(dir: &Path) -> Result<BTreeMap<String, Vec<Annotation>>> {
    label_files(dir)?
        .into_iter()
        .map(|(id, path)| Ok((id, read_kitti_labels(&path)?)))
        .collect()
}

/// Reads KITTI-with-score detection files; every line needs the 16th field.
pub fn read_detection_dir(dir: &Path) -> Result<BTreeMap<String, Vec<DetectionRecord>>> {
    let mut out = BTreeMap::new();
    for (id, path) in label_files(dir)? {
        let mut recs = Vec::new();
        for (i, a) in read_kitti_labels(&path)?.into_iter().enumerate() {
            let Some(confidence) = a.score else {
                return Err(Error::Label {
                    path: path.clone(),
                    line: i + 1,
                    reason: "detection without score".into(),
                });
            };
            if !(a.bbox[0] < a.bbox[2] && a.bbox[1] < a.bbox[3]) {
                return Err(Error::Label {
                    path: path.clone(),
                    line: i + 1,
                    reason: format!("invalid box {:?}", a.bbox),
                });
            }
            recs.push(DetectionRecord {
                image_id: id.clone(),
                class_name: a.class_name,
                bbox: a.bbox,
                confidence,
            });
        }
        out.insert(id, recs);
    }
    Ok(out)
}

pub fn evaluate_dirs(gt_dir: &Path, det_dir: &Path, class: &str, params: &EvalParams, interpolation: Interpolation) -> Result<EvalReport> {
    let gts = read_label_dir(gt_dir)?;
    let dets = read_detection_dir(det_dir)?;
    for id in dets.keys().filter(|k| !gts.contains_key(*k)) {
        log::warn!("detections for {id} have no ground truth file");
    }
    Ok(evaluate(&gts, &dets, class, params, interpolation))
}

pub fn report_text(report: &EvalReport, class: &str, params: &EvalParams) -> String {
    let mut s = String::new();
    let interp = match report.interpolation {
        Interpolation::AllPoint => "all-point",
        Interpolation::ElevenPoint => "11-point",
    };
    let _ = writeln!(s, "class            {class}");
    let _ = writeln!(s, "difficulty       easy (height > {} px, truncation < {})", params.min_box_height_px, params.max_truncation);
    let _ = writeln!(s, "iou threshold    {}", params.iou_threshold);
    let _ = writeln!(s, "AP ({interp})  {:.4}", report.average_precision);
    let _ = writeln!(s, "gt evaluated     {}", report.gt_evaluated);
    let _ = writeln!(s, "gt ignored       {}", report.gt_ignored);
    let _ = writeln!(s, "true positives   {}", report.true_positives);
    let _ = writeln!(s, "false positives  {}", report.false_positives);
    let _ = writeln!(s, "ignored dets     {}", report.ignored_detections);
    s
}

pub fn curve_csv(report: &EvalReport) -> String {
    let mut s = String::from("recall,precision\n");
    for (r, p) in &report.curve {
        let _ = writeln!(s, "{r},{p}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(bbox: BBox, truncated: f64) -> Annotation {
        let mut a = Annotation::from_box("Car", bbox);
        a.truncated = truncated;
        a
    }

    #[test]
    fn iou_cases() {
        let a = [0.0, 0.0, 10.0, 10.0];
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &[20.0, 20.0, 30.0, 30.0]), 0.0);
        assert_eq!(iou(&a, &[10.0, 0.0, 20.0, 10.0]), 0.0);
        assert!((iou(&a, &[5.0, 0.0, 15.0, 10.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&a, &[3.0, 3.0, 3.0, 8.0]), 0.0);
    }

    #[test]
    fn easy_boundaries() {
        let p = EvalParams::default();
        assert!(easy_filter(&gt([0.0, 0.0, 10.0, 41.0], 0.0), &p));
        assert!(!easy_filter(&gt([0.0, 0.0, 10.0, 40.0], 0.0), &p));
        assert!(!easy_filter(&gt([0.0, 0.0, 10.0, 100.0], 0.15), &p));
        assert!(easy_filter(&gt([0.0, 0.0, 10.0, 100.0], 0.14), &p));
    }

    #[test]
    fn matching_rules() {
        let set = GroundTruthSet {
            evaluated: vec![[0.0, 0.0, 10.0, 10.0]],
            ignored: vec![],
        };
        let one = match_detections(&[([0.0, 0.0, 10.0, 6.0], 0.9)], &set, 0.5);
        assert_eq!(one, vec![MatchLabel::TruePositive]);
        let dup = match_detections(&[([0.0, 0.0, 10.0, 9.0], 0.3), ([0.0, 0.0, 10.0, 10.0], 0.8)], &set, 0.5);
        assert_eq!(dup, vec![MatchLabel::FalsePositive, MatchLabel::TruePositive]);
        let tie = match_detections(&[([0.0, 0.0, 10.0, 9.0], 0.5), ([0.0, 0.0, 10.0, 10.0], 0.5)], &set, 0.5);
        assert_eq!(tie, vec![MatchLabel::TruePositive, MatchLabel::FalsePositive]);
    }

    #[test]
    fn ignored_gt_absorbs_detection() {
        let p = EvalParams::default();
        let set = GroundTruthSet::from_annotations(&[gt([0.0, 0.0, 100.0, 100.0], 0.5)], "Car", &p);
        assert!(set.evaluated.is_empty());
        let d = [0.0, 0.0, 100.0, 70.0];
        assert!((iou(&d, &set.ignored[0]) - 0.7).abs() < 1e-12);
        assert_eq!(match_detections(&[(d, 0.9)], &set, 0.5), vec![MatchLabel::Ignored]);
    }

    #[test]
    fn ap_fixtures() {
        let r = average_precision(&[(0.9, MatchLabel::TruePositive)], 1, Interpolation::AllPoint);
        assert_eq!(r.average_precision, 1.0);
        assert_eq!(r.curve, vec![(1.0, 1.0)]);
        let r = average_precision(&[(0.9, MatchLabel::FalsePositive), (0.8, MatchLabel::TruePositive)], 1, Interpolation::AllPoint);
        assert_eq!(r.average_precision, 0.5);
        assert_eq!(average_precision(&[], 3, Interpolation::AllPoint).average_precision, 0.0);
        let none = average_precision(&[], 0, Interpolation::AllPoint);
        assert_eq!(none.average_precision, 0.0);
        assert!(none.curve.is_empty());
    }

    #[test]
    fn eleven_point_single_tp() {
        let r = average_precision(&[(0.9, MatchLabel::TruePositive)], 1, Interpolation::ElevenPoint);
        assert!((r.average_precision - 1.0).abs() < 1e-12);
        let r = average_precision(&[(0.9, MatchLabel::TruePositive)], 2, Interpolation::ElevenPoint);
        assert!((r.average_precision - 6.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn dontcare_and_other_classes() {
        let p = EvalParams::default();
        let mut dc = Annotation::from_box("DontCare", [0.0, 0.0, 50.0, 50.0]);
        dc.truncated = -1.0;
        let ped = Annotation::from_box("Pedestrian", [60.0, 0.0, 70.0, 50.0]);
        let set = GroundTruthSet::from_annotations(&[dc, ped], "Car", &p);
        assert_eq!(set.ignored.len(), 1);
        assert!(set.evaluated.is_empty());
    }

    #[test]
    fn report_outputs() {
        let r = average_precision(&[(0.9, MatchLabel::FalsePositive), (0.8, MatchLabel::TruePositive)], 1, Interpolation::AllPoint);
        let csv = curve_csv(&r);
        assert_eq!(csv, "recall,precision\n0,0\n1,0.5\n");
        assert!(report_text(&r, "Car", &EvalParams::default()).contains("0.5000"));
    }
}
