use crate::error::{Result, TllError};
use crate::geom::BBox;

/// Area of the region shared by every box divided by the area covered by
/// any box. Measures how consistently several annotators boxed the same
/// instance.
pub fn annotation_consistency(boxes: &[BBox]) -> Result<f64> {
    if boxes.len() < 2 {
        return Err(TllError::InvalidConfig("at least two annotations are required".into()));
    }
    if boxes.iter().any(|b| !(b.w > 0.0 && b.h > 0.0)) {
        return Err(TllError::InvalidConfig("boxes must have positive size".into()));
    }
    let x0 = boxes.iter().map(BBox::x0).fold(f64::NEG_INFINITY, f64::max);
    let x1 = boxes.iter().map(BBox::x1).fold(f64::INFINITY, f64::min);
    let y0 = boxes.iter().map(BBox::y0).fold(f64::NEG_INFINITY, f64::max);
    let y1 = boxes.iter().map(BBox::y1).fold(f64::INFINITY, f64::min);
    if x1 <= x0 || y1 <= y0 {
        return Ok(0.0);
    }
    let inter = (x1 - x0) * (y1 - y0);
    Ok((inter / union_area(boxes)).clamp(0.0, 1.0))
}

/// Exact union area by coordinate compression.
pub fn union_area(boxes: &[BBox]) -> f64 {
    let mut xs: Vec<f64> = boxes.iter().flat_map(|b| [b.x0(), b.x1()]).collect();
    let mut ys: Vec<f64> = boxes.iter().flat_map(|b| [b.y0(), b.y1()]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let mut area = 0.0;
    for xw in xs.windows(2) {
        let mx = 0.5 * (xw[0] + xw[1]);
        for yw in ys.windows(2) {
            let my = 0.5 * (yw[0] + yw[1]);
            if boxes
                .iter()
                .any(|b| b.x0() <= mx && mx <= b.x1() && b.y0() <= my && my <= b.y1())
            {
                area += (xw[1] - xw[0]) * (yw[1] - yw[0]);
            }
        }
    }
    area
}
