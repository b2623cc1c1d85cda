//! Ground-truth rendering of vertex confidence maps and link fields.
//!
//! Annotations are given in image pixels; output maps live on a grid that is
//! `map_stride` times coarser. All lengths in [`EncoderConfig`] are in map
//! cells.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TllError};
use crate::geom::{unit_direction, Annotation, Point};
use crate::grid::{ScalarGrid, VectorField};

/// Which end of the topological line a vertex map describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vertex {
    Top,
    Bottom,
}

/// Gaussian width of a vertex peak, in map cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Sigma {
    Fixed {
        value: f64,
    },
    /// `max(fraction * instance height, floor)`
    HeightScaled {
        fraction: f64,
        floor: f64,
    },
}

impl Default for Sigma {
    fn default() -> Self {
        Sigma::HeightScaled {
            fraction: 0.1,
            floor: 1.0,
        }
    }
}

impl Sigma {
    pub fn for_height(&self, height_cells: f64) -> f64 {
        match *self {
            Sigma::Fixed { value } => value,
            Sigma::HeightScaled { fraction, floor } => (fraction * height_cells).max(floor),
        }
    }
}

/// How overlapping links are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    /// Divide the per-pixel sum by the number of instances in the image.
    Global,
    /// Divide the per-pixel sum by the number of links covering that pixel.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub sigma: Sigma,
    /// Link width as a fraction of instance height.
    pub link_width_scale: f64,
    /// Minimum link width in map cells.
    pub link_width_floor: f64,
    pub map_stride: usize,
    pub average_mode: AverageMode,
    /// Gaussians are rendered out to this many standard deviations.
    pub truncate_sigmas: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            sigma: Sigma::default(),
            link_width_scale: 0.1,
            link_width_floor: 1.0,
            map_stride: 4,
            average_mode: AverageMode::Local,
            truncate_sigmas: 3.0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        let sigma_ok = match self.sigma {
            Sigma::Fixed { value } => value > 0.0,
            Sigma::HeightScaled { fraction, floor } => fraction > 0.0 && floor > 0.0,
        };
        if !sigma_ok {
            return Err(TllError::InvalidConfig("sigma must be positive".into()));
        }
        if !(self.link_width_scale > 0.0 && self.link_width_scale <= 1.0) {
            return Err(TllError::InvalidConfig("link_width_scale must be in (0, 1]".into()));
        }
        if self.map_stride < 1 {
            return Err(TllError::InvalidConfig("map_stride must be >= 1".into()));
        }
        if !(self.truncate_sigmas > 0.0) || !(self.link_width_floor >= 0.0) {
            return Err(TllError::InvalidConfig(
                "truncation and link floor must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn stride(&self) -> f64 {
        self.map_stride as f64
    }

    /// Map shape for an image of the given pixel size.
    pub fn map_shape(&self, image_size: (usize, usize)) -> (usize, usize) {
        (
            image_size.0.div_ceil(self.map_stride),
            image_size.1.div_ceil(self.map_stride),
        )
    }

    pub fn link_width(&self, height_cells: f64) -> f64 {
        (self.link_width_scale * height_cells).max(self.link_width_floor)
    }
}

/// Vertex position of `ann` in map coordinates, checked against the map.
fn map_vertex(ann: &Annotation, which: Vertex, shape: (usize, usize), stride: f64) -> Result<Point> {
    let p = match which {
        Vertex::Top => ann.line.top,
        Vertex::Bottom => ann.line.bottom,
    };
    let q = p.scaled(1.0 / stride);
    let inside = q.is_finite()
        && q.x >= 0.0
        && q.y >= 0.0
        && q.x <= shape.0.saturating_sub(1) as f64
        && q.y <= shape.1.saturating_sub(1) as f64;
    if !inside {
        return Err(TllError::VertexOutsideImage { x: p.x, y: p.y });
    }
    Ok(q)
}

/// Max-aggregated Gaussian peaks, one per annotated vertex.
pub fn encode_vertex_map(
    annotations: &[Annotation],
    which: Vertex,
    shape: (usize, usize),
    cfg: &EncoderConfig,
) -> Result<ScalarGrid> {
    cfg.validate()?;
    let stride = cfg.stride();
    let (w, h) = shape;
    let mut grid = ScalarGrid::zeros(w, h);
    for ann in annotations {
        let centre = map_vertex(ann, which, shape, stride)?;
        let sigma = cfg.sigma.for_height(ann.height() / stride);
        splat_gaussian(&mut grid, centre, sigma, cfg.truncate_sigmas, |old, g| old.max(g));
    }
    Ok(grid)
}

/// Visits every cell within `truncate * sigma` of `centre`, combining the
/// Gaussian value into the grid with `combine(old, g)`.
pub(crate) fn splat_gaussian(
    grid: &mut ScalarGrid,
    centre: Point,
    sigma: f64,
    truncate: f64,
    combine: impl Fn(f64, f64) -> f64,
) {
    let (w, h) = (grid.width(), grid.height());
    if w == 0 || h == 0 {
        return;
    }
    let radius = truncate * sigma;
    let r2 = radius * radius;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let x_lo = (centre.x - radius).ceil().max(0.0) as usize;
    let y_lo = (centre.y - radius).ceil().max(0.0) as usize;
    let x_hi = ((centre.x + radius).floor().max(0.0) as usize).min(w - 1);
    let y_hi = ((centre.y + radius).floor().max(0.0) as usize).min(h - 1);
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let d2 = Point::new(x as f64, y as f64).distance_sq(&centre);
            if d2 <= r2 {
                let g = (-d2 * inv).exp();
                let old = grid.get(x, y);
                grid.set(x, y, combine(old, g));
            }
        }
    }
}

/// Distance from `p` to the segment `a`–`b`.
pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(&Point::new(a.x + t * dx, a.y + t * dy))
}

/// Unit top-to-bottom vectors painted along each instance's line.
pub fn encode_link_field(
    annotations: &[Annotation],
    shape: (usize, usize),
    cfg: &EncoderConfig,
) -> Result<VectorField> {
    cfg.validate()?;
    let stride = cfg.stride();
    let (w, h) = shape;
    let mut sum = vec![[0.0f64; 2]; w * h];
    let mut count = vec![0u32; w * h];

    for ann in annotations {
        let t = map_vertex(ann, Vertex::Top, shape, stride)?;
        let b = map_vertex(ann, Vertex::Bottom, shape, stride)?;
        let (vx, vy) = unit_direction(&t, &b)?;
        let half = 0.5 * cfg.link_width(t.distance(&b));

        let x_lo = (t.x.min(b.x) - half).ceil().max(0.0) as usize;
        let y_lo = (t.y.min(b.y) - half).ceil().max(0.0) as usize;
        let x_hi = ((t.x.max(b.x) + half).floor() as usize).min(w - 1);
        let y_hi = ((t.y.max(b.y) + half).floor() as usize).min(h - 1);
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                if point_segment_distance(Point::new(x as f64, y as f64), t, b) <= half {
                    let i = y * w + x;
                    sum[i][0] += vx;
                    sum[i][1] += vy;
                    count[i] += 1;
                }
            }
        }
    }

    let total = annotations.len() as f64;
    let values = sum
        .into_iter()
        .zip(count)
        .map(|(s, n)| {
            if n == 0 {
                return [0.0, 0.0];
            }
            let d = match cfg.average_mode {
                AverageMode::Global => total,
                AverageMode::Local => n as f64,
            };
            [s[0] / d, s[1] / d]
        })
        .collect();
    VectorField::from_vec(w, h, values)
}

/// Both vertex maps and the link field for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MapTriple {
    pub top: ScalarGrid,
    pub bottom: ScalarGrid,
    pub link: VectorField,
}

impl MapTriple {
    pub fn shape(&self) -> (usize, usize) {
        (self.top.width(), self.top.height())
    }

    pub fn check_shapes(&self) -> Result<()> {
        let s = self.shape();
        for found in [
            (self.bottom.width(), self.bottom.height()),
            (self.link.width(), self.link.height()),
        ] {
            if found != s {
                return Err(TllError::ShapeMismatch { expected: s, found });
            }
        }
        Ok(())
    }
}

pub fn encode_maps(annotations: &[Annotation], shape: (usize, usize), cfg: &EncoderConfig) -> Result<MapTriple> {
    Ok(MapTriple {
        top: encode_vertex_map(annotations, Vertex::Top, shape, cfg)?,
        bottom: encode_vertex_map(annotations, Vertex::Bottom, shape, cfg)?,
        link: encode_link_field(annotations, shape, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_cfg(sigma: f64) -> EncoderConfig {
        EncoderConfig {
            sigma: Sigma::Fixed { value: sigma },
            map_stride: 1,
            ..Default::default()
        }
    }

    fn vertical(x: f64, y0: f64, y1: f64) -> Annotation {
        Annotation::new(Point::new(x, y0), Point::new(x, y1))
    }

    #[test]
    fn single_peak_value_and_decay() {
        let cfg = unit_cfg(2.0);
        let g = encode_vertex_map(&[vertical(10.0, 5.0, 25.0)], Vertex::Top, (30, 30), &cfg).unwrap();
        assert_eq!(g.get(10, 5), 1.0);
        let d: f64 = 3.0;
        let expected = (-d * d / (2.0 * 4.0)).exp();
        assert!((g.get(13, 5) - expected).abs() < 1e-15);
        assert!((g.get(10, 8) - expected).abs() < 1e-15);
        assert!(g.get(11, 5) > g.get(12, 5));
    }

    #[test]
    fn duplicate_instances_are_idempotent() {
        let cfg = unit_cfg(1.5);
        let one = encode_vertex_map(&[vertical(8.0, 4.0, 20.0)], Vertex::Top, (20, 24), &cfg).unwrap();
        let two = encode_vertex_map(
            &[vertical(8.0, 4.0, 20.0), vertical(8.0, 4.0, 18.0)],
            Vertex::Top,
            (20, 24),
            &cfg,
        )
        .unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn midpoint_between_two_peaks() {
        let sigma = 2.0;
        let cfg = unit_cfg(sigma);
        let anns = [vertical(10.0, 10.0, 30.0), vertical(16.0, 10.0, 30.0)];
        let g = encode_vertex_map(&anns, Vertex::Top, (30, 40), &cfg).unwrap();
        let expected = (-(1.5f64 * sigma).powi(2) / (2.0 * sigma * sigma)).exp();
        assert!((expected - 0.3247).abs() < 1e-4);
        assert!((g.get(13, 10) - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_annotations_give_zero_maps() {
        let m = encode_maps(&[], (8, 6), &EncoderConfig::default()).unwrap();
        assert!(m.top.values().iter().all(|&v| v == 0.0));
        assert!(m.link.values().iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn vertex_outside_image_is_error() {
        let cfg = unit_cfg(1.0);
        let err = encode_vertex_map(&[vertical(40.0, 1.0, 5.0)], Vertex::Top, (10, 10), &cfg);
        assert!(matches!(err, Err(TllError::VertexOutsideImage { .. })));
    }

    #[test]
    fn degenerate_line_is_rejected() {
        let cfg = unit_cfg(1.0);
        let err = encode_link_field(&[vertical(4.0, 4.0, 4.0)], (10, 10), &cfg).unwrap_err();
        assert_eq!(err.to_string(), "zero-length topological line");
    }

    #[test]
    fn vertical_link_is_unit_down() {
        let cfg = unit_cfg(1.0);
        let f = encode_link_field(&[vertical(5.0, 2.0, 22.0)], (12, 26), &cfg).unwrap();
        let mut on = 0;
        for y in 0..26 {
            for x in 0..12 {
                let v = f.get(x, y);
                // width 0.1 * 20 = 2 -> everything within distance 1 of the segment
                let on_link = (x == 5 && (1..=23).contains(&y)) || ((x == 4 || x == 6) && (2..=22).contains(&y));
                if on_link {
                    assert_eq!(v, [0.0, 1.0], "cell ({x},{y})");
                    on += 1;
                } else {
                    assert_eq!(v, [0.0, 0.0], "cell ({x},{y})");
                }
            }
        }
        assert_eq!(on, 23 + 2 * 21);
    }

    #[test]
    fn overlapping_identical_directions_average_to_unit() {
        for mode in [AverageMode::Global, AverageMode::Local] {
            let cfg = EncoderConfig {
                average_mode: mode,
                ..unit_cfg(1.0)
            };
            let f = encode_link_field(&[vertical(5.0, 2.0, 22.0), vertical(5.0, 2.0, 22.0)], (12, 26), &cfg).unwrap();
            assert_eq!(f.get(5, 10), [0.0, 1.0]);
        }
    }

    #[test]
    fn crossing_links_average() {
        // A vertical and a near-horizontal instance cross at (10, 10).
        let a = vertical(10.0, 2.0, 18.0);
        let b = Annotation::new(Point::new(2.0, 8.0), Point::new(18.0, 12.0));
        let cfg = EncoderConfig {
            average_mode: AverageMode::Global,
            ..unit_cfg(1.0)
        };
        let f = encode_link_field(&[a, b], (20, 20), &cfg).unwrap();
        let n = 16f64.hypot(4.0);
        let v2 = [16.0 / n, 4.0 / n];
        let expected = [(0.0 + v2[0]) / 2.0, (1.0 + v2[1]) / 2.0];
        let got = f.get(10, 10);
        assert!((got[0] - expected[0]).abs() < 1e-12 && (got[1] - expected[1]).abs() < 1e-12);
        assert!(got[0].hypot(got[1]) < 1.0);
        // Global averaging also halves cells covered by one link only.
        assert_eq!(f.get(10, 3), [0.0, 0.5]);
        let local = encode_link_field(&[a, b], (20, 20), &unit_cfg(1.0)).unwrap();
        assert_eq!(local.get(10, 10), got);
        assert_eq!(local.get(10, 3), [0.0, 1.0]);
    }

    #[test]
    fn stride_maps_image_pixels_to_cells() {
        let cfg = EncoderConfig {
            sigma: Sigma::Fixed { value: 1.0 },
            map_stride: 4,
            ..Default::default()
        };
        assert_eq!(cfg.map_shape((640, 481)), (160, 121));
        let g = encode_vertex_map(&[vertical(40.0, 20.0, 100.0)], Vertex::Bottom, (30, 30), &cfg).unwrap();
        assert_eq!(g.get(10, 25), 1.0);
    }

    fn arb_annotations() -> impl Strategy<Value = Vec<Annotation>> {
        prop::collection::vec((2.0f64..28.0, 1.0f64..10.0, -3.0f64..3.0, 6.0f64..18.0), 0..6).prop_map(|v| {
            v.into_iter()
                .map(|(x, y, lean, h)| {
                    Annotation::new(Point::new(x, y), Point::new((x + lean).clamp(0.0, 29.0), y + h))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn adding_instance_never_decreases(anns in arb_annotations(), extra in arb_annotations()) {
            let cfg = EncoderConfig { map_stride: 1, ..Default::default() };
            let base = encode_vertex_map(&anns, Vertex::Top, (30, 30), &cfg).unwrap();
            let mut more = anns.clone();
            more.extend(extra);
            let bigger = encode_vertex_map(&more, Vertex::Top, (30, 30), &cfg).unwrap();
            for (a, b) in base.values().iter().zip(bigger.values()) {
                prop_assert!(b >= a);
                prop_assert!((0.0..=1.0).contains(b));
            }
        }

        #[test]
        fn permutation_invariant(anns in arb_annotations()) {
            let cfg = EncoderConfig { map_stride: 1, ..Default::default() };
            let mut rev = anns.clone();
            rev.reverse();
            let a = encode_maps(&anns, (30, 30), &cfg).unwrap();
            let b = encode_maps(&rev, (30, 30), &cfg).unwrap();
            prop_assert_eq!(a.top, b.top);
            prop_assert_eq!(a.bottom, b.bottom);
            for (u, v) in a.link.values().iter().zip(b.link.values()) {
                prop_assert!((u[0] - v[0]).abs() < 1e-12 && (u[1] - v[1]).abs() < 1e-12);
            }
        }

        #[test]
        fn link_norm_bounded(anns in arb_annotations()) {
            for mode in [AverageMode::Global, AverageMode::Local] {
                let cfg = EncoderConfig { map_stride: 1, average_mode: mode, ..Default::default() };
                let f = encode_link_field(&anns, (30, 30), &cfg).unwrap();
                prop_assert!(f.max_norm() <= 1.0 + 1e-6);
            }
        }
    }
}
