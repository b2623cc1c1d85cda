//! From predicted maps to scored topological lines.
//!
//! Vertex candidates come from NMS on the two vertex maps. Every admissible
//! top/bottom pair is scored by how well the link field aligns with the
//! segment joining them, and a maximum-score bipartite matching picks the
//! final pairs. A detection's score is the product of both vertex
//! confidences and its link score.

mod assign;
mod link;
mod nms;
mod temporal;

use serde::{Deserialize, Serialize};

pub use assign::{assignment_score, hungarian_assign};
pub use link::link_score;
pub use nms::{nms_peaks, Peak};
pub use temporal::{aggregate_sequence, TemporalMode};

use crate::encoder::MapTriple;
use crate::error::{Result, TllError};
use crate::geom::TopoLine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub peak_threshold: f64,
    /// Map cells.
    pub nms_radius: f64,
    /// Samples along each candidate edge, endpoints included.
    pub num_samples: usize,
    /// Map cells; longer candidate edges are not scored.
    pub max_pair_distance: f64,
    pub min_link_score: f64,
    /// Refine integer peak positions to sub-cell precision.
    pub subcell_refine: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            peak_threshold: 0.3,
            nms_radius: 2.0,
            num_samples: 10,
            max_pair_distance: 100.0,
            min_link_score: 0.2,
            subcell_refine: true,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(TllError::InvalidConfig("num_samples must be >= 2".into()));
        }
        if !(self.nms_radius > 0.0) {
            return Err(TllError::InvalidConfig("nms_radius must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.peak_threshold) || !(0.0..=1.0).contains(&self.min_link_score) {
            return Err(TllError::InvalidConfig("thresholds must be in [0, 1]".into()));
        }
        if !(self.max_pair_distance > 0.0) {
            return Err(TllError::InvalidConfig("max_pair_distance must be > 0".into()));
        }
        Ok(())
    }
}

/// Vertex candidates with the link score of every top/bottom pair.
/// Inadmissible pairs carry `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub tops: Vec<Peak>,
    pub bottoms: Vec<Peak>,
    /// `link_scores[i][j]` for top `i` and bottom `j`.
    pub link_scores: Vec<Vec<f64>>,
}

impl CandidateSet {
    /// Builds the score matrix for the given vertices. A pair is admissible
    /// when the bottom is not above the top and the two are at most
    /// `max_pair_distance` apart.
    pub fn score(
        tops: Vec<Peak>,
        bottoms: Vec<Peak>,
        link: &crate::grid::VectorField,
        cfg: &DecoderConfig,
    ) -> Result<Self> {
        let mut link_scores = vec![vec![f64::NEG_INFINITY; bottoms.len()]; tops.len()];
        for (i, t) in tops.iter().enumerate() {
            for (j, b) in bottoms.iter().enumerate() {
                let d = t.point.distance(&b.point);
                if b.point.y < t.point.y || d > cfg.max_pair_distance || d <= f64::EPSILON {
                    continue;
                }
                link_scores[i][j] = link_score(link, t.point, b.point, cfg.num_samples)?;
            }
        }
        Ok(Self {
            tops,
            bottoms,
            link_scores,
        })
    }

    /// Matches tops to bottoms and emits one line per matched pair.
    pub fn assign(&self, cfg: &DecoderConfig) -> Vec<TopoLine> {
        hungarian_assign(&self.link_scores, cfg.min_link_score)
            .into_iter()
            .map(|(i, j)| {
                let (t, b) = (&self.tops[i], &self.bottoms[j]);
                let e = self.link_scores[i][j].clamp(0.0, 1.0);
                TopoLine::new(t.point, b.point, t.confidence * b.confidence * e)
            })
            .collect()
    }
}

/// Peak detection and pair scoring, without the final matching.
pub fn candidates(maps: &MapTriple, cfg: &DecoderConfig) -> Result<CandidateSet> {
    cfg.validate()?;
    maps.check_shapes()?;
    let tops = nms_peaks(&maps.top, cfg);
    let bottoms = nms_peaks(&maps.bottom, cfg);
    CandidateSet::score(tops, bottoms, &maps.link, cfg)
}

/// Full single-frame decode. Lines are in map coordinates.
pub fn decode(maps: &MapTriple, cfg: &DecoderConfig) -> Result<Vec<TopoLine>> {
    Ok(candidates(maps, cfg)?.assign(cfg))
}
