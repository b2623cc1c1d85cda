//! Squared-error training objective over the three predicted maps and its
//! analytic gradient.

use serde::{Deserialize, Serialize};

use crate::encoder::MapTriple;
use crate::error::{Result, TllError};
use crate::grid::{ScalarGrid, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Weight of the link-field term.
    pub lambda: f64,
    /// Divide by the number of cells instead of summing.
    pub normalize_by_cells: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            normalize_by_cells: false,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(TllError::InvalidConfig("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_shapes(pred: &MapTriple, gt: &MapTriple) -> Result<()> {
    pred.check_shapes()?;
    gt.check_shapes()?;
    if pred.shape() != gt.shape() {
        return Err(TllError::ShapeMismatch {
            expected: pred.shape(),
            found: gt.shape(),
        });
    }
    Ok(())
}

fn scale(cfg: &LossConfig, pred: &MapTriple) -> f64 {
    let (w, h) = pred.shape();
    if cfg.normalize_by_cells && w * h > 0 {
        1.0 / (w * h) as f64
    } else {
        1.0
    }
}

/// `|Dt~ - Dt|^2 + |Db~ - Db|^2 + lambda |L~ - L|^2`
pub fn tll_loss(pred: &MapTriple, gt: &MapTriple, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    check_shapes(pred, gt)?;
    let sq = |a: &ScalarGrid, b: &ScalarGrid| -> f64 {
        a.values().iter().zip(b.values()).map(|(p, g)| (p - g) * (p - g)).sum()
    };
    let link: f64 = pred
        .link
        .values()
        .iter()
        .zip(gt.link.values())
        .map(|(p, g)| {
            let dx = p[0] - g[0];
            let dy = p[1] - g[1];
            dx * dx + dy * dy
        })
        .sum();
    let total = sq(&pred.top, &gt.top) + sq(&pred.bottom, &gt.bottom) + cfg.lambda * link;
    Ok(total * scale(cfg, pred))
}

/// Gradient of [`tll_loss`] with respect to the predicted maps.
pub fn tll_loss_gradient(pred: &MapTriple, gt: &MapTriple, cfg: &LossConfig) -> Result<MapTriple> {
    cfg.validate()?;
    check_shapes(pred, gt)?;
    let (w, h) = pred.shape();
    let s = scale(cfg, pred);
    let diff = |a: &ScalarGrid, b: &ScalarGrid| -> Result<ScalarGrid> {
        let v = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(p, g)| 2.0 * s * (p - g))
            .collect();
        ScalarGrid::from_vec(w, h, v)
    };
    let k = 2.0 * s * cfg.lambda;
    let link = pred
        .link
        .values()
        .iter()
        .zip(gt.link.values())
        .map(|(p, g)| [k * (p[0] - g[0]), k * (p[1] - g[1])])
        .collect();
    Ok(MapTriple {
        top: diff(&pred.top, &gt.top)?,
        bottom: diff(&pred.bottom, &gt.bottom)?,
        link: VectorField::from_vec(w, h, link)?,
    })
}
