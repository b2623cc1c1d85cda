//! Box synthesis, detection matching and MR-FPPI evaluation.

mod boxes;
mod consistency;
mod curve;
mod matching;
mod plot;
mod protocol;

pub use boxes::{iou, line_to_box, DEFAULT_ASPECT};
pub use consistency::{annotation_consistency, union_area};
pub use curve::{log_average_miss_rate, mr_fppi, reference_fppi, CurvePoint, MrFppiCurve, MISS_RATE_FLOOR};
pub use matching::{annotation_boxes, match_detections, ImageResult, Outcome};
pub use plot::curves_to_svg;
pub use protocol::Protocol;

use crate::error::Result;
use crate::geom::{Annotation, BBox};

/// Summary of one protocol over a set of images.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    pub protocol: Protocol,
    pub curve: MrFppiCurve,
    pub log_average_miss_rate: f64,
}

/// Matches every image under `protocol` and summarises the curve.
/// `frames` pairs each image's detections with its ground truth.
pub fn evaluate(frames: &[(Vec<BBox>, Vec<Annotation>)], protocol: &Protocol) -> Result<ProtocolReport> {
    let results = frames
        .iter()
        .map(|(dets, gts)| match_detections(dets, gts, protocol))
        .collect::<Result<Vec<_>>>()?;
    let curve = mr_fppi(&results, frames.len())?;
    let mr = log_average_miss_rate(&curve);
    Ok(ProtocolReport {
        protocol: protocol.clone(),
        curve,
        log_average_miss_rate: mr,
    })
}
