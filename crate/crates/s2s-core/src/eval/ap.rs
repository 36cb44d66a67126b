//! Greedy detection matching and 40-point interpolated average precision.

use std::collections::BTreeMap;

use super::{iou3d, Box3D, FrameBoxes, ObjectClass};

/// Number of recall positions in the interpolated precision-recall sweep.
const RECALL_POSITIONS: usize = 40;

/// Outcome of greedy matching between detections and ground truths.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Per detection (original order): true positive or not.
    pub det_is_tp: Vec<bool>,
    /// Per ground truth: matched by some detection or not.
    pub gt_matched: Vec<bool>,
    /// Detection indices in descending-confidence evaluation order.
    pub order: Vec<usize>,
}

/// Greedy matching in descending confidence: each detection claims the
/// highest-IoU unmatched ground truth with IoU >= threshold. Ties on
/// confidence keep the original detection order; ties on IoU take the lowest
/// ground-truth index. Detections without confidence score 0.
pub fn match_detections(dets: &[Box3D], gts: &[Box3D], iou_threshold: f64) -> MatchResult {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let ca = dets[a].confidence.unwrap_or(0.0);
        let cb = dets[b].confidence.unwrap_or(0.0);
        cb.partial_cmp(&ca).unwrap().then(a.cmp(&b))
    });

    let mut det_is_tp = vec![false; dets.len()];
    let mut gt_matched = vec![false; gts.len()];
    for &det_idx in &order {
        let mut best: Option<(usize, f64)> = None;
        for (gt_idx, gt) in gts.iter().enumerate() {
            if gt_matched[gt_idx] {
                continue;
            }
            let iou = iou3d(&dets[det_idx], gt);
            if iou < iou_threshold {
                continue;
            }
            if best.is_none_or(|(_, best_iou)| iou > best_iou) {
                best = Some((gt_idx, iou));
            }
        }
        if let Some((gt_idx, _)) = best {
            gt_matched[gt_idx] = true;
            det_is_tp[det_idx] = true;
        }
    }
    MatchResult {
        det_is_tp,
        gt_matched,
        order,
    }
}

/// Average precision of one class at one IoU threshold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ApResult {
    pub class: ObjectClass,
    pub iou_threshold: f64,
    /// NaN when undefined (no ground truths); check `defined`.
    pub ap: f64,
    /// False when there were no ground truths of this class.
    pub defined: bool,
    pub num_gts: usize,
    pub num_dets: usize,
    pub true_positives: usize,
}

/// Single-frame average precision; see [`evaluate_frames`] for multi-frame
/// accumulation.
pub fn average_precision(
    dets: &[Box3D],
    gts: &[Box3D],
    class: ObjectClass,
    iou_threshold: f64,
) -> ApResult {
    let det_frame = FrameBoxes {
        frame: 0,
        boxes: dets.to_vec(),
    };
    let gt_frame = FrameBoxes {
        frame: 0,
        boxes: gts.to_vec(),
    };
    evaluate_frames(
        std::slice::from_ref(&det_frame),
        std::slice::from_ref(&gt_frame),
        class,
        iou_threshold,
    )
}

/// Matches detections to ground truths frame by frame, pools the scored
/// outcomes, and integrates the 40-point interpolated precision-recall
/// curve. AP is undefined (NaN, `defined = false`) without ground truths.
pub fn evaluate_frames(
    dets: &[FrameBoxes],
    gts: &[FrameBoxes],
    class: ObjectClass,
    iou_threshold: f64,
) -> ApResult {
    let mut frames: BTreeMap<u64, (Vec<Box3D>, Vec<Box3D>)> = BTreeMap::new();
    for f in dets {
        frames.entry(f.frame).or_default().0.extend(
            f.boxes.iter().filter(|b| b.class == class).cloned(),
        );
    }
    for f in gts {
        frames.entry(f.frame).or_default().1.extend(
            f.boxes.iter().filter(|b| b.class == class).cloned(),
        );
    }

    let mut scored: Vec<(f64, bool)> = Vec::new();
    let mut num_gts = 0usize;
    for (frame_dets, frame_gts) in frames.values() {
        num_gts += frame_gts.len();
        let matched = match_detections(frame_dets, frame_gts, iou_threshold);
        for (i, det) in frame_dets.iter().enumerate() {
            scored.push((det.confidence.unwrap_or(0.0), matched.det_is_tp[i]));
        }
    }
    let num_dets = scored.len();
    let true_positives = scored.iter().filter(|(_, tp)| *tp).count();

    if num_gts == 0 {
        return ApResult {
            class,
            iou_threshold,
            ap: f64::NAN,
            defined: false,
            num_gts,
            num_dets,
            true_positives,
        };
    }

    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut curve = Vec::with_capacity(scored.len());
    let mut tp = 0usize;
    for (rank, (_, is_tp)) in scored.iter().enumerate() {
        tp += *is_tp as usize;
        let precision = tp as f64 / (rank + 1) as f64;
        let recall = tp as f64 / num_gts as f64;
        curve.push((recall, precision));
    }

    // 40 equally spaced recall positions (1/40 .. 1); interpolated precision
    // is the best precision at recall >= r
    let mut ap = 0.0;
    for i in 1..=RECALL_POSITIONS {
        let r = i as f64 / RECALL_POSITIONS as f64;
        let p = curve
            .iter()
            .filter(|(recall, _)| *recall >= r - 1e-12)
            .map(|(_, precision)| *precision)
            .fold(0.0, f64::max);
        ap += p;
    }
    ap /= RECALL_POSITIONS as f64;

    ApResult {
        class,
        iou_threshold,
        ap,
        defined: true,
        num_gts,
        num_dets,
        true_positives,
    }
}
