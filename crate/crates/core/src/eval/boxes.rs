use crate::error::{Result, TllError};
use crate::geom::{BBox, TopoLine};

/// Width-to-height ratio used when synthesising boxes from lines.
pub const DEFAULT_ASPECT: f64 = 0.41;

/// Box of height equal to the line length and width `aspect * height`,
/// centred on the line midpoint.
pub fn line_to_box(line: &TopoLine, aspect: f64) -> Result<BBox> {
    let h = line.length();
    if !(h > f64::EPSILON) || !h.is_finite() {
        return Err(TllError::ZeroLengthLine);
    }
    if !(aspect > 0.0) {
        return Err(TllError::InvalidConfig("aspect must be > 0".into()));
    }
    let c = line.midpoint();
    Ok(BBox::new(c.x, c.y, aspect * h, h, line.score))
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use proptest::prelude::*;

    #[test]
    fn vertical_line_box() {
        let l = TopoLine::new(Point::new(10.0, 10.0), Point::new(10.0, 110.0), 0.8);
        let b = line_to_box(&l, DEFAULT_ASPECT).unwrap();
        assert_eq!((b.cx, b.cy, b.h), (10.0, 60.0, 100.0));
        assert!((b.w - 41.0).abs() < 1e-12);
        assert_eq!(b.score, 0.8);
    }

    #[test]
    fn unit_aspect_and_slanted() {
        let l = TopoLine::new(Point::new(0.0, 0.0), Point::new(0.0, 50.0), 1.0);
        let b = line_to_box(&l, 1.0).unwrap();
        assert_eq!((b.w, b.h), (50.0, 50.0));

        let l = TopoLine::new(Point::new(0.0, 0.0), Point::new(30.0, 40.0), 1.0);
        let b = line_to_box(&l, DEFAULT_ASPECT).unwrap();
        assert_eq!((b.cx, b.cy, b.h), (15.0, 20.0, 50.0));
        assert!((b.w - 20.5).abs() < 1e-12);
    }

    #[test]
    fn zero_length_is_error() {
        let p = Point::new(3.0, 3.0);
        assert_eq!(
            line_to_box(&TopoLine::new(p, p, 1.0), DEFAULT_ASPECT),
            Err(TllError::ZeroLengthLine)
        );
    }

    #[test]
    fn iou_cases() {
        let a = BBox::from_corners(0.0, 0.0, 1.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BBox::from_corners(2.0, 0.0, 3.0, 1.0, 1.0)), 0.0);
        let half = BBox::from_corners(0.5, 0.0, 1.5, 1.0, 1.0);
        assert!((iou(&a, &half) - 1.0 / 3.0).abs() < 1e-15);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-50.0f64..50.0, -50.0f64..50.0, 0.5f64..40.0, 0.5f64..40.0)
            .prop_map(|(cx, cy, w, h)| BBox::new(cx, cy, w, h, 1.0))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let x = iou(&a, &b);
            prop_assert_eq!(x, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&x));
            if x == 1.0 {
                prop_assert!((a.cx - b.cx).abs() < 1e-9 && (a.w - b.w).abs() < 1e-9);
            }
        }

        #[test]
        fn box_keeps_aspect_and_midpoint(x0 in -100.0f64..100.0, y0 in -100.0f64..100.0,
                                         dx in -30.0f64..30.0, dy in 1.0f64..200.0) {
            let l = TopoLine::new(Point::new(x0, y0), Point::new(x0 + dx, y0 + dy), 1.0);
            let b = line_to_box(&l, DEFAULT_ASPECT).unwrap();
            prop_assert!((b.w / b.h - DEFAULT_ASPECT).abs() <= 1e-12);
            prop_assert!((b.cx - l.midpoint().x).abs() <= 1e-9);
            prop_assert!((b.cy - l.midpoint().y).abs() <= 1e-9);
        }
    }
}
