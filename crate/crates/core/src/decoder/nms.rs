use crate::geom::Point;
use crate::grid::ScalarGrid;

use super::DecoderConfig;

/// A detected vertex candidate and its map confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub point: Point,
    pub confidence: f64,
}

/// Local maxima of `grid` at or above `peak_threshold`, thinned so that no
/// two survivors lie within `nms_radius` of each other. Sorted by descending
/// confidence, ties broken by row-major position.
pub fn nms_peaks(grid: &ScalarGrid, cfg: &DecoderConfig) -> Vec<Peak> {
    let (w, h) = (grid.width(), grid.height());
    let mut cells = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = grid.get(x, y);
            if v < cfg.peak_threshold || v <= 0.0 {
                continue;
            }
            if is_local_max(grid, x, y, v) {
                cells.push((x, y, v));
            }
        }
    }
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.1, a.0).cmp(&(b.1, b.0))));

    let r2 = cfg.nms_radius * cfg.nms_radius;
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for c in cells {
        let clear = kept.iter().all(|k| {
            let dx = k.0 as f64 - c.0 as f64;
            let dy = k.1 as f64 - c.1 as f64;
            dx * dx + dy * dy > r2
        });
        if clear {
            kept.push(c);
        }
    }

    kept.into_iter()
        .map(|(x, y, v)| {
            let point = if cfg.subcell_refine {
                refine(grid, x, y)
            } else {
                Point::new(x as f64, y as f64)
            };
            Peak { point, confidence: v }
        })
        .collect()
}

fn is_local_max(grid: &ScalarGrid, x: usize, y: usize, v: f64) -> bool {
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            if nx >= 0 && ny >= 0 && nx < w && ny < h && grid.get(nx as usize, ny as usize) > v {
                return false;
            }
        }
    }
    true
}

/// Sub-cell offset from three samples around a maximum. Fits a parabola to
/// the log values when all are positive, which is exact for a Gaussian.
fn offset_1d(left: f64, centre: f64, right: f64) -> f64 {
    let (l, c, r) = if left > 0.0 && centre > 0.0 && right > 0.0 {
        (left.ln(), centre.ln(), right.ln())
    } else {
        (left, centre, right)
    };
    let denom = l - 2.0 * c + r;
    if denom >= 0.0 || l == r {
        return 0.0;
    }
    (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
}

fn refine(grid: &ScalarGrid, x: usize, y: usize) -> Point {
    let (w, h) = (grid.width(), grid.height());
    let c = grid.get(x, y);
    let ox = if x > 0 && x + 1 < w {
        offset_1d(grid.get(x - 1, y), c, grid.get(x + 1, y))
    } else {
        0.0
    };
    let oy = if y > 0 && y + 1 < h {
        offset_1d(grid.get(x, y - 1), c, grid.get(x, y + 1))
    } else {
        0.0
    };
    Point::new(x as f64 + ox, y as f64 + oy)
}
