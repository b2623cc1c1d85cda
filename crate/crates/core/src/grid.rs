//! Dense row-major fields: scalar confidence maps and 2-vector link fields.
//!
//! Values are held as `f64` in memory and stored as little-endian `f32` on
//! disk. The binary layout is:
//!
//! ```text
//! magic   "TLLG"      4 bytes
//! version u8 = 1
//! kind    u8          0 = scalar, 1 = vector
//! width   u32 LE
//! height  u32 LE
//! values  f32 LE      row-major; vector fields interleave vx, vy
//! ```

use crate::error::{Result, TllError};
use crate::geom::Point;

pub const GRID_MAGIC: &[u8; 4] = b"TLLG";
pub const GRID_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    width: usize,
    height: usize,
    values: Vec<[f64; 2]>,
}

/// Bilinear sampling shared by scalar and vector fields.
pub trait Sample {
    type Value;

    fn shape(&self) -> (usize, usize);

    /// Interpolates the four cells surrounding `p`. Integer coordinates
    /// return the stored cell value exactly.
    fn sample_bilinear(&self, p: Point) -> Result<Self::Value>;

    fn contains(&self, p: Point) -> bool {
        let (w, h) = self.shape();
        p.is_finite() && w > 0 && h > 0 && p.x >= 0.0 && p.y >= 0.0 && p.x <= (w - 1) as f64 && p.y <= (h - 1) as f64
    }
}

struct Corners {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    fx: f64,
    fy: f64,
}

fn corners(p: Point, width: usize, height: usize) -> Result<Corners> {
    let inside = p.is_finite()
        && width > 0
        && height > 0
        && p.x >= 0.0
        && p.y >= 0.0
        && p.x <= (width - 1) as f64
        && p.y <= (height - 1) as f64;
    if !inside {
        return Err(TllError::PointOutsideGrid {
            x: p.x,
            y: p.y,
            width,
            height,
        });
    }
    let x0 = p.x.floor() as usize;
    let y0 = p.y.floor() as usize;
    Ok(Corners {
        x0,
        y0,
        x1: (x0 + 1).min(width - 1),
        y1: (y0 + 1).min(height - 1),
        fx: p.x - x0 as f64,
        fy: p.y - y0 as f64,
    })
}

#[inline]
fn lerp2(v00: f64, v10: f64, v01: f64, v11: f64, fx: f64, fy: f64) -> f64 {
    // Short-circuit the exact-cell case so integer coordinates never pick up
    // rounding from zero-weighted neighbours.
    let top = if fx == 0.0 { v00 } else { v00 + fx * (v10 - v00) };
    let bottom = if fx == 0.0 { v01 } else { v01 + fx * (v11 - v01) };
    if fy == 0.0 {
        top
    } else {
        top + fy * (bottom - top)
    }
}

impl ScalarGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(TllError::ShapeMismatch {
                expected: (width, height),
                found: (values.len(), 1),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TllError::InvalidConfig("grid values must be finite".into()));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarGrid {
        ScalarGrid {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = header(0, self.width, self.height, self.values.len());
        for v in &self.values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (kind, width, height, payload) = parse_header(bytes)?;
        if kind != 0 {
            return Err(TllError::MalformedGrid(format!(
                "expected scalar grid, found kind {kind}"
            )));
        }
        let values = read_f32s(payload, width * height)?;
        Ok(Self { width, height, values })
    }
}

impl Sample for ScalarGrid {
    type Value = f64;

    fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn sample_bilinear(&self, p: Point) -> Result<f64> {
        let c = corners(p, self.width, self.height)?;
        Ok(lerp2(
            self.get(c.x0, c.y0),
            self.get(c.x1, c.y0),
            self.get(c.x0, c.y1),
            self.get(c.x1, c.y1),
            c.fx,
            c.fy,
        ))
    }
}

impl VectorField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0, 0.0])
    }

    pub fn filled(width: usize, height: usize, value: [f64; 2]) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != width * height {
            return Err(TllError::ShapeMismatch {
                expected: (width, height),
                found: (values.len(), 1),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(TllError::InvalidConfig("field values must be finite".into()));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: [f64; 2]) {
        self.values[y * self.width + x] = v;
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = header(1, self.width, self.height, 2 * self.values.len());
        for v in &self.values {
            out.extend_from_slice(&(v[0] as f32).to_le_bytes());
            out.extend_from_slice(&(v[1] as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (kind, width, height, payload) = parse_header(bytes)?;
        if kind != 1 {
            return Err(TllError::MalformedGrid(format!(
                "expected vector field, found kind {kind}"
            )));
        }
        let flat = read_f32s(payload, 2 * width * height)?;
        let values = flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        Ok(Self { width, height, values })
    }
}

impl Sample for VectorField {
    type Value = [f64; 2];

    fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn sample_bilinear(&self, p: Point) -> Result<[f64; 2]> {
        let c = corners(p, self.width, self.height)?;
        let v00 = self.get(c.x0, c.y0);
        let v10 = self.get(c.x1, c.y0);
        let v01 = self.get(c.x0, c.y1);
        let v11 = self.get(c.x1, c.y1);
        Ok([
            lerp2(v00[0], v10[0], v01[0], v11[0], c.fx, c.fy),
            lerp2(v00[1], v10[1], v01[1], v11[1], c.fx, c.fy),
        ])
    }
}

/// Either kind of grid, as decoded from a file whose kind is not known up front.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyGrid {
    Scalar(ScalarGrid),
    Vector(VectorField),
}

impl AnyGrid {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (kind, ..) = parse_header(bytes)?;
        match kind {
            0 => ScalarGrid::from_bytes(bytes).map(AnyGrid::Scalar),
            _ => VectorField::from_bytes(bytes).map(AnyGrid::Vector),
        }
    }
}

fn header(kind: u8, width: usize, height: usize, n_floats: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * n_floats);
    out.extend_from_slice(GRID_MAGIC);
    out.push(GRID_VERSION);
    out.push(kind);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out
}

fn parse_header(bytes: &[u8]) -> Result<(u8, usize, usize, &[u8])> {
    if bytes.len() < HEADER_LEN {
        return Err(TllError::MalformedGrid(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != GRID_MAGIC {
        return Err(TllError::MalformedGrid("bad magic".into()));
    }
    if bytes[4] != GRID_VERSION {
        return Err(TllError::MalformedGrid(format!("unsupported version {}", bytes[4])));
    }
    let kind = bytes[5];
    if kind > 1 {
        return Err(TllError::MalformedGrid(format!("unknown kind {kind}")));
    }
    let width = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    Ok((kind, width, height, &bytes[HEADER_LEN..]))
}

fn read_f32s(payload: &[u8], count: usize) -> Result<Vec<f64>> {
    let expected = count
        .checked_mul(4)
        .ok_or_else(|| TllError::MalformedGrid("shape overflows".into()))?;
    if payload.len() != expected {
        return Err(TllError::MalformedGrid(format!(
            "payload has {} bytes, shape requires {expected}",
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(TllError::MalformedGrid("non-finite value".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_grid_samples_constant() {
        let g = ScalarGrid::filled(5, 4, 0.7);
        for p in [Point::new(0.0, 0.0), Point::new(2.3, 1.7), Point::new(4.0, 3.0)] {
            assert!((g.sample_bilinear(p).unwrap() - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn ramp_midpoint() {
        let g = ScalarGrid::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(g.sample_bilinear(Point::new(0.5, 0.0)).unwrap(), 0.5);
    }

    #[test]
    fn two_by_two_centre() {
        // 0.25 * (0 + 1 + 1 + 1)
        let g = ScalarGrid::from_vec(2, 2, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.sample_bilinear(Point::new(0.5, 0.5)).unwrap(), 0.75);
    }

    #[test]
    fn out_of_bounds_is_error() {
        let g = ScalarGrid::zeros(3, 3);
        let err = g.sample_bilinear(Point::new(2.5, 0.0)).unwrap_err();
        assert!(err.to_string().contains("point outside grid"));
        assert!(g.sample_bilinear(Point::new(-0.1, 0.0)).is_err());
        assert!(g.sample_bilinear(Point::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn vector_sampling_interpolates_components() {
        let f = VectorField::from_vec(2, 1, vec![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert_eq!(f.sample_bilinear(Point::new(0.5, 0.0)).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn empty_payload_is_malformed() {
        let err = ScalarGrid::from_bytes(&[]).unwrap_err();
        assert!(err.to_string().contains("malformed grid file"));
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let mut bytes = ScalarGrid::filled(4, 4, 0.5).to_bytes();
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(
            ScalarGrid::from_bytes(&bytes),
            Err(TllError::MalformedGrid(_))
        ));
    }

    #[test]
    fn bad_magic_and_kind() {
        let mut bytes = ScalarGrid::zeros(1, 1).to_bytes();
        assert!(VectorField::from_bytes(&bytes).is_err());
        bytes[0] = b'X';
        assert!(ScalarGrid::from_bytes(&bytes).is_err());
    }

    #[test]
    fn header_layout() {
        let bytes = VectorField::zeros(3, 2).to_bytes();
        assert_eq!(&bytes[..4], b"TLLG");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 1);
        assert_eq!(&bytes[6..10], &3u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
        assert_eq!(bytes.len(), 14 + 3 * 2 * 2 * 4);
    }

    fn f32_grid() -> impl Strategy<Value = ScalarGrid> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            prop::collection::vec(-1e3f32..1e3, w * h)
                .prop_map(move |v| ScalarGrid::from_vec(w, h, v.into_iter().map(f64::from).collect()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn scalar_round_trip(g in f32_grid()) {
            let back = ScalarGrid::from_bytes(&g.to_bytes()).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn vector_round_trip(w in 1usize..10, h in 1usize..10, seed in any::<u64>()) {
            let mut s = seed;
            let values = (0..w * h).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (s >> 40) as f32 / (1u64 << 24) as f32;
                [f64::from(a), f64::from(-a)]
            }).collect();
            let f = VectorField::from_vec(w, h, values).unwrap();
            prop_assert_eq!(VectorField::from_bytes(&f.to_bytes()).unwrap(), f);
        }

        #[test]
        fn integer_coordinates_are_exact(g in f32_grid(), fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
            let x = (fx * g.width() as f64).floor().min((g.width() - 1) as f64);
            let y = (fy * g.height() as f64).floor().min((g.height() - 1) as f64);
            let v = g.sample_bilinear(Point::new(x, y)).unwrap();
            prop_assert_eq!(v, g.get(x as usize, y as usize));
        }

        #[test]
        fn sample_within_neighbour_range(g in f32_grid(), fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
            let p = Point::new(fx * (g.width() - 1) as f64, fy * (g.height() - 1) as f64);
            let v = g.sample_bilinear(p).unwrap();
            let x0 = p.x.floor() as usize;
            let y0 = p.y.floor() as usize;
            let x1 = (x0 + 1).min(g.width() - 1);
            let y1 = (y0 + 1).min(g.height() - 1);
            let n = [g.get(x0, y0), g.get(x1, y0), g.get(x0, y1), g.get(x1, y1)];
            let lo = n.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = n.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }
}
