//! Non-learned temporal aggregation of per-frame predicted maps.

use serde::{Deserialize, Serialize};

use crate::encoder::MapTriple;
use crate::error::{Result, TllError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TemporalMode {
    /// Cell-wise maximum; link vectors keep the frame with the largest norm.
    Max,
    Mean,
    /// `state = alpha * current + (1 - alpha) * state`, seeded with the first
    /// frame; the last frame is the reference.
    Ema {
        alpha: f64,
    },
}

impl std::str::FromStr for TemporalMode {
    type Err = TllError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(TemporalMode::Max),
            "mean" => Ok(TemporalMode::Mean),
            _ => {
                let alpha = s
                    .strip_prefix("ema:")
                    .or_else(|| s.strip_prefix("ema="))
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| {
                        TllError::InvalidConfig(format!(
                            "unknown temporal mode {s:?} (expected max, mean or ema:<alpha>)"
                        ))
                    })?;
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(TllError::InvalidConfig("ema alpha must be in [0, 1]".into()));
                }
                Ok(TemporalMode::Ema { alpha })
            }
        }
    }
}

/// Combines a time-ordered sequence of map triples into one.
pub fn aggregate_sequence(frames: &[MapTriple], mode: TemporalMode) -> Result<MapTriple> {
    let first = frames.first().ok_or(TllError::EmptySequence)?;
    first.check_shapes()?;
    for f in &frames[1..] {
        f.check_shapes()?;
        if f.shape() != first.shape() {
            return Err(TllError::ShapeMismatch {
                expected: first.shape(),
                found: f.shape(),
            });
        }
    }

    let mut out = first.clone();
    match mode {
        TemporalMode::Max => {
            for f in &frames[1..] {
                zip_scalar(&mut out, f, |a, b| a.max(b));
                for (a, b) in out.link.values_mut().iter_mut().zip(f.link.values()) {
                    if b[0].hypot(b[1]) >= a[0].hypot(a[1]) {
                        *a = *b;
                    }
                }
            }
        }
        TemporalMode::Mean => {
            for f in &frames[1..] {
                zip_scalar(&mut out, f, |a, b| a + b);
                zip_vector(&mut out, f, |a, b| a + b);
            }
            let inv = 1.0 / frames.len() as f64;
            for v in out.top.values_mut().iter_mut().chain(out.bottom.values_mut()) {
                *v *= inv;
            }
            for v in out.link.values_mut() {
                v[0] *= inv;
                v[1] *= inv;
            }
        }
        TemporalMode::Ema { alpha } => {
            for f in &frames[1..] {
                let mix = |state: f64, cur: f64| alpha * cur + (1.0 - alpha) * state;
                zip_scalar(&mut out, f, mix);
                zip_vector(&mut out, f, mix);
            }
        }
    }
    Ok(out)
}

fn zip_scalar(acc: &mut MapTriple, f: &MapTriple, op: impl Fn(f64, f64) -> f64) {
    for (a, b) in acc.top.values_mut().iter_mut().zip(f.top.values()) {
        *a = op(*a, *b);
    }
    for (a, b) in acc.bottom.values_mut().iter_mut().zip(f.bottom.values()) {
        *a = op(*a, *b);
    }
}

fn zip_vector(acc: &mut MapTriple, f: &MapTriple, op: impl Fn(f64, f64) -> f64) {
    for (a, b) in acc.link.values_mut().iter_mut().zip(f.link.values()) {
        a[0] = op(a[0], b[0]);
        a[1] = op(a[1], b[1]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ScalarGrid, VectorField};

    fn triple(t: f64, b: f64, l: [f64; 2]) -> MapTriple {
        MapTriple {
            top: ScalarGrid::filled(3, 2, t),
            bottom: ScalarGrid::filled(3, 2, b),
            link: VectorField::filled(3, 2, l),
        }
    }

    #[test]
    fn single_frame_is_identity() {
        let f = triple(0.3, 0.7, [0.1, 0.2]);
        for mode in [TemporalMode::Max, TemporalMode::Mean, TemporalMode::Ema { alpha: 0.4 }] {
            assert_eq!(aggregate_sequence(std::slice::from_ref(&f), mode).unwrap(), f);
        }
    }

    #[test]
    fn max_mean_ema() {
        let frames = [triple(0.2, 0.9, [0.0, 0.5]), triple(0.6, 0.1, [0.0, -0.8])];
        let m = aggregate_sequence(&frames, TemporalMode::Max).unwrap();
        assert_eq!(m.top.get(1, 1), 0.6);
        assert_eq!(m.bottom.get(0, 0), 0.9);
        assert_eq!(m.link.get(2, 1), [0.0, -0.8]);

        let m = aggregate_sequence(&frames, TemporalMode::Mean).unwrap();
        assert!((m.top.get(0, 0) - 0.4).abs() < 1e-15);
        assert!((m.link.get(0, 0)[1] + 0.15).abs() < 1e-15);

        let m = aggregate_sequence(&frames, TemporalMode::Ema { alpha: 0.25 }).unwrap();
        assert!((m.top.get(0, 0) - (0.25 * 0.6 + 0.75 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(aggregate_sequence(&[], TemporalMode::Max), Err(TllError::EmptySequence));
        let mut other = triple(0.0, 0.0, [0.0, 0.0]);
        other.top = ScalarGrid::zeros(4, 2);
        assert!(aggregate_sequence(&[triple(0.0, 0.0, [0.0, 0.0]), other], TemporalMode::Mean).is_err());
    }

    #[test]
    fn parse_modes() {
        assert_eq!("max".parse::<TemporalMode>().unwrap(), TemporalMode::Max);
        assert_eq!(
            "ema:0.3".parse::<TemporalMode>().unwrap(),
            TemporalMode::Ema { alpha: 0.3 }
        );
        assert!("ema:3".parse::<TemporalMode>().is_err());
        assert!("median".parse::<TemporalMode>().is_err());
    }
}
