use crate::error::Result;
use crate::geom::{Annotation, BBox};

use super::boxes::{iou, line_to_box, DEFAULT_ASPECT};
use super::protocol::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    /// Matched an ignore region; counts neither way.
    Ignored,
}

/// Per-image matching result, keeping each detection's score so curves can
/// be swept over thresholds afterwards.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageResult {
    /// `(score, outcome)` in descending score order.
    pub detections: Vec<(f64, Outcome)>,
    /// Ground-truth instances admitted by the protocol.
    pub num_gt: usize,
    /// Admitted ground truth left unmatched.
    pub false_negatives: usize,
}

impl ImageResult {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.detections.iter().filter(|d| d.1 == outcome).count()
    }
}

/// Ground-truth boxes synthesised from annotation lines.
pub fn annotation_boxes(gts: &[Annotation]) -> Result<Vec<BBox>> {
    gts.iter().map(|a| line_to_box(&a.line, DEFAULT_ASPECT)).collect()
}

/// Greedy matching in descending detection score. Each detection takes the
/// unmatched admitted ground truth with the highest IoU at or above the
/// protocol threshold; failing that, a detection overlapping an ignored
/// instance at the threshold is ignored; otherwise it is a false positive.
pub fn match_detections(dets: &[BBox], gts: &[Annotation], protocol: &Protocol) -> Result<ImageResult> {
    protocol.validate()?;
    let gt_boxes = annotation_boxes(gts)?;
    let admitted: Vec<bool> = gts.iter().map(|a| protocol.admits(a)).collect();
    let mut taken = vec![false; gts.len()];

    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));

    let mut detections = Vec::with_capacity(dets.len());
    for d in order {
        let det = &dets[d];
        let mut best: Option<(usize, f64)> = None;
        for (g, gb) in gt_boxes.iter().enumerate() {
            if !admitted[g] || taken[g] {
                continue;
            }
            let o = iou(det, gb);
            if o >= protocol.iou_threshold && best.is_none_or(|(_, b)| o > b) {
                best = Some((g, o));
            }
        }
        let outcome = if let Some((g, _)) = best {
            taken[g] = true;
            Outcome::TruePositive
        } else if gt_boxes
            .iter()
            .zip(&admitted)
            .any(|(gb, &adm)| !adm && iou(det, gb) >= protocol.iou_threshold)
        {
            Outcome::Ignored
        } else {
            Outcome::FalsePositive
        };
        detections.push((det.score, outcome));
    }

    let num_gt = admitted.iter().filter(|&&a| a).count();
    let matched = taken.iter().filter(|&&t| t).count();
    Ok(ImageResult {
        detections,
        num_gt,
        false_negatives: num_gt - matched,
    })
}
