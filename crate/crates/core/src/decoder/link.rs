use crate::error::{Result, TllError};
use crate::geom::{unit_direction, Point};
use crate::grid::{Sample, VectorField};

/// Mean projection of the link field onto the candidate edge direction,
/// sampled at `num_samples` evenly spaced points from `top` to `bottom`
/// inclusive. Result lies in [-1, 1].
pub fn link_score(field: &VectorField, top: Point, bottom: Point, num_samples: usize) -> Result<f64> {
    if num_samples < 2 {
        return Err(TllError::InvalidConfig("num_samples must be >= 2".into()));
    }
    let (ux, uy) = unit_direction(&top, &bottom)?;
    let last = (num_samples - 1) as f64;
    let mut acc = 0.0;
    for k in 0..num_samples {
        let u = k as f64 / last;
        let p = Point::new(top.x + u * (bottom.x - top.x), top.y + u * (bottom.y - top.y));
        let v = field.sample_bilinear(p)?;
        acc += v[0] * ux + v[1] * uy;
    }
    Ok((acc / num_samples as f64).clamp(-1.0, 1.0))
}
