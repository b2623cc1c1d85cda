use serde::{Deserialize, Serialize};

use crate::error::{Result, TllError};
use crate::geom::Annotation;

/// Ground-truth filter defining which instances count in an evaluation.
/// Instances outside the filter become ignore regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    pub name: String,
    /// Half-open `[min, max)` height range in image pixels.
    pub height_range: (f64, f64),
    pub max_occlusion: f64,
    pub iou_threshold: f64,
}

impl Protocol {
    pub fn new(name: &str, height_range: (f64, f64), max_occlusion: f64) -> Self {
        Self {
            name: name.to_string(),
            height_range,
            max_occlusion,
            iou_threshold: 0.5,
        }
    }

    pub fn reasonable() -> Self {
        Self::new("reasonable", (50.0, f64::INFINITY), 0.35)
    }
    pub fn all() -> Self {
        Self::new("all", (20.0, f64::INFINITY), 0.8)
    }
    pub fn near() -> Self {
        Self::new("near", (80.0, f64::INFINITY), 0.0)
    }
    pub fn middle() -> Self {
        Self::new("middle", (30.0, 80.0), 0.0)
    }
    pub fn far() -> Self {
        Self::new("far", (20.0, 30.0), 0.0)
    }

    pub fn presets() -> Vec<Protocol> {
        vec![
            Self::reasonable(),
            Self::all(),
            Self::near(),
            Self::middle(),
            Self::far(),
        ]
    }

    pub fn preset(name: &str) -> Result<Protocol> {
        Self::presets()
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| TllError::InvalidConfig(format!("unknown protocol {name:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.height_range;
        if !(lo < hi) {
            return Err(TllError::InvalidConfig(format!(
                "{}: height range min must be < max",
                self.name
            )));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return Err(TllError::InvalidConfig(format!(
                "{}: iou_threshold must be in (0, 1)",
                self.name
            )));
        }
        if !(0.0..=1.0).contains(&self.max_occlusion) {
            return Err(TllError::InvalidConfig(format!(
                "{}: max_occlusion must be in [0, 1]",
                self.name
            )));
        }
        Ok(())
    }

    /// Whether the instance is evaluated (as opposed to ignored).
    pub fn admits(&self, ann: &Annotation) -> bool {
        let h = ann.height();
        !ann.ignore
            && h >= self.height_range.0
            && h < self.height_range.1
            && ann.occlusion_fraction <= self.max_occlusion
    }
}
