use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TllError};
use crate::eval::{iou, line_to_box};
use crate::geom::{Annotation, BBox, Point, TopoLine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Image width and height in pixels.
    pub image_size: (usize, usize),
    /// Inclusive range of instance counts.
    pub num_instances: (usize, usize),
    /// Pedestrian heights in pixels, sampled log-uniformly.
    pub height_range: (f64, f64),
    /// Probability that an instance belongs to an occlusion cluster.
    pub occlusion_cluster_prob: f64,
    /// Lean of the top-to-bottom line from vertical, degrees.
    pub lean_angle_range: (f64, f64),
    pub rng_seed: u64,
    /// Minimum gap in pixels between boxes of different clusters/singles.
    pub min_separation: f64,
    /// Boxes stay at least this many pixels inside the image.
    pub border: f64,
    pub aspect: f64,
    /// Every cluster member overlaps another member at least this much.
    pub cluster_min_iou: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            image_size: (640, 480),
            num_instances: (1, 10),
            height_range: (20.0, 200.0),
            occlusion_cluster_prob: 0.0,
            lean_angle_range: (-8.0, 8.0),
            rng_seed: 0,
            min_separation: 12.0,
            border: 4.0,
            aspect: crate::eval::DEFAULT_ASPECT,
            cluster_min_iou: 0.3,
        }
    }
}

impl SceneConfig {
    /// Named presets: `clear` (no occlusion), `default`, `crowded`.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "clear" => Ok(base),
            "default" => Ok(Self {
                occlusion_cluster_prob: 0.2,
                ..base
            }),
            "crowded" => Ok(Self {
                num_instances: (8, 14),
                occlusion_cluster_prob: 0.5,
                ..base
            }),
            _ => Err(TllError::InvalidConfig(format!("unknown scene preset {name:?}"))),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TllError::InvalidConfig(m.into()));
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return bad("image_size must be positive");
        }
        if self.num_instances.0 > self.num_instances.1 {
            return bad("num_instances range is inverted");
        }
        let (hl, hh) = self.height_range;
        if !(hl > 0.0 && hl <= hh) {
            return bad("height_range must satisfy 0 < min <= max");
        }
        if !(0.0..=1.0).contains(&self.occlusion_cluster_prob) {
            return bad("occlusion_cluster_prob must be in [0, 1]");
        }
        let (a0, a1) = self.lean_angle_range;
        if !(a0 <= a1 && a0 > -45.0 && a1 < 45.0) {
            return bad("lean_angle_range must lie in (-45, 45) degrees");
        }
        if !(self.min_separation >= 0.0 && self.border >= 0.0 && self.aspect > 0.0) {
            return bad("separation, border and aspect must be non-negative");
        }
        if !(0.0..1.0).contains(&self.cluster_min_iou) {
            return bad("cluster_min_iou must be in [0, 1)");
        }
        Ok(())
    }
}

const UNIT_ATTEMPTS: usize = 400;
const PARTNER_ATTEMPTS: usize = 60;

/// Random pedestrian scene. Deterministic in `cfg` (including its seed).
pub fn generate_scene(cfg: &SceneConfig) -> Result<Vec<Annotation>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let k = rng.gen_range(cfg.num_instances.0..=cfg.num_instances.1);

    let clustered = (0..k).filter(|_| rng.gen_bool(cfg.occlusion_cluster_prob)).count();
    let mut units = Vec::new();
    let mut rem = clustered;
    while rem >= 2 {
        let size = match rem {
            2 | 4 => 2,
            3 => 3,
            _ => *[2, 3].choose(&mut rng).unwrap(),
        };
        units.push(size);
        rem -= size;
    }
    units.extend(std::iter::repeat_n(1, k - units.iter().sum::<usize>()));

    let mut placed: Vec<Vec<Annotation>> = Vec::new();
    let mut occupied: Vec<BBox> = Vec::new();
    for size in units {
        let unit = (0..UNIT_ATTEMPTS)
            .find_map(|_| {
                let members = sample_unit(&mut rng, cfg, size)?;
                let boxes: Vec<BBox> = members.iter().map(|a| instance_box(a, cfg)).collect();
                let clear = boxes
                    .iter()
                    .all(|b| occupied.iter().all(|o| !boxes_within(b, o, cfg.min_separation)));
                clear.then_some((members, boxes))
            })
            .ok_or_else(|| {
                TllError::InfeasibleScene(format!(
                    "could not place {k} instances in a {}x{} image",
                    cfg.image_size.0, cfg.image_size.1
                ))
            })?;
        occupied.extend(unit.1);
        placed.push(unit.0);
    }

    let mut out = Vec::with_capacity(k);
    for members in placed {
        out.extend(with_occlusion(members, cfg));
    }
    Ok(out)
}

fn instance_box(a: &Annotation, cfg: &SceneConfig) -> BBox {
    line_to_box(&a.line, cfg.aspect).expect("sampled lines have positive length")
}

/// Whether the boxes come closer than `gap` pixels.
fn boxes_within(a: &BBox, b: &BBox, gap: f64) -> bool {
    let dx = (a.cx - b.cx).abs() - 0.5 * (a.w + b.w);
    let dy = (a.cy - b.cy).abs() - 0.5 * (a.h + b.h);
    dx < gap && dy < gap
}

fn sample_height(rng: &mut ChaCha8Rng, cfg: &SceneConfig) -> f64 {
    let (lo, hi) = cfg.height_range;
    if lo == hi {
        return lo;
    }
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn sample_lean(rng: &mut ChaCha8Rng, cfg: &SceneConfig) -> f64 {
    let (a0, a1) = cfg.lean_angle_range;
    if a0 == a1 {
        a0.to_radians()
    } else {
        rng.gen_range(a0..a1).to_radians()
    }
}

/// Line with the given centre, height and lean.
fn line_at(centre: Point, h: f64, lean: f64) -> Annotation {
    let (s, c) = lean.sin_cos();
    let top = Point::new(centre.x - 0.5 * h * s, centre.y - 0.5 * h * c);
    let bottom = Point::new(centre.x + 0.5 * h * s, centre.y + 0.5 * h * c);
    Annotation::new(top, bottom)
}

fn inside(b: &BBox, cfg: &SceneConfig) -> bool {
    let (w, h) = (cfg.image_size.0 as f64, cfg.image_size.1 as f64);
    b.x0() >= cfg.border && b.y0() >= cfg.border && b.x1() <= w - cfg.border && b.y1() <= h - cfg.border
}

fn sample_unit(rng: &mut ChaCha8Rng, cfg: &SceneConfig, size: usize) -> Option<Vec<Annotation>> {
    let (iw, ih) = (cfg.image_size.0 as f64, cfg.image_size.1 as f64);
    let h = sample_height(rng, cfg);
    let lean = sample_lean(rng, cfg);
    let w = cfg.aspect * h;
    let (x_lo, x_hi) = (cfg.border + 0.5 * w, iw - cfg.border - 0.5 * w);
    let (y_lo, y_hi) = (cfg.border + 0.5 * h, ih - cfg.border - 0.5 * h);
    if x_lo >= x_hi || y_lo >= y_hi {
        return None;
    }
    let centre = Point::new(rng.gen_range(x_lo..x_hi), rng.gen_range(y_lo..y_hi));
    let anchor = line_at(centre, h, lean);
    let mut members = vec![anchor];

    while members.len() < size {
        let partner = (0..PARTNER_ATTEMPTS).find_map(|_| {
            let base = members[rng.gen_range(0..members.len())];
            let bh = base.height();
            let ph = (bh * rng.gen_range(0.85..1.15)).clamp(cfg.height_range.0, cfg.height_range.1);
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let bc = base.line.midpoint();
            let pc = Point::new(
                bc.x + side * rng.gen_range(0.15..0.4) * cfg.aspect * bh,
                bc.y + rng.gen_range(-0.08..0.08) * bh,
            );
            let cand = line_at(pc, ph, sample_lean(rng, cfg));
            let cb = instance_box(&cand, cfg);
            let overlaps = members
                .iter()
                .any(|m| iou(&instance_box(m, cfg), &cb) >= cfg.cluster_min_iou);
            (inside(&cb, cfg) && overlaps).then_some(cand)
        })?;
        members.push(partner);
    }
    Some(members)
}

/// Members further from the camera (smaller bottom y) are occluded by the
/// ones in front of them.
fn with_occlusion(members: Vec<Annotation>, cfg: &SceneConfig) -> Vec<Annotation> {
    let boxes: Vec<BBox> = members.iter().map(|a| instance_box(a, cfg)).collect();
    members
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let occ = members
                .iter()
                .enumerate()
                .filter(|(j, m)| *j != i && m.line.bottom.y > a.line.bottom.y)
                .map(|(j, _)| boxes[i].intersection_area(&boxes[j]) / boxes[i].area())
                .fold(0.0, f64::max);
            a.with_occlusion(occ)
        })
        .collect()
}

/// Fraction of instances whose box overlaps some other instance's box with
/// IoU at least `min_iou`.
pub fn overlap_fraction(annotations: &[Annotation], aspect: f64, min_iou: f64) -> f64 {
    if annotations.is_empty() {
        return 0.0;
    }
    let boxes: Vec<BBox> = annotations
        .iter()
        .filter_map(|a| line_to_box(&TopoLine { score: 1.0, ..a.line }, aspect).ok())
        .collect();
    let n = boxes
        .iter()
        .enumerate()
        .filter(|(i, b)| boxes.iter().enumerate().any(|(j, o)| j != *i && iou(b, o) >= min_iou))
        .count();
    n as f64 / annotations.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_instances() {
        let cfg = SceneConfig {
            num_instances: (0, 0),
            ..Default::default()
        };
        assert!(generate_scene(&cfg).unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        let cfg = SceneConfig::preset("crowded").unwrap().with_seed(7);
        assert_eq!(generate_scene(&cfg).unwrap(), generate_scene(&cfg).unwrap());
        let other = generate_scene(&cfg.clone().with_seed(8)).unwrap();
        assert_ne!(generate_scene(&cfg).unwrap(), other);
    }

    #[test]
    fn instances_inside_and_upright() {
        for seed in 0..50 {
            let cfg = SceneConfig::preset("crowded").unwrap().with_seed(seed);
            for a in generate_scene(&cfg).unwrap() {
                let b = line_to_box(&a.line, cfg.aspect).unwrap();
                assert!(inside(&b, &cfg));
                assert!(a.line.bottom.y >= a.line.top.y);
                assert!((0.0..=1.0).contains(&a.occlusion_fraction));
            }
        }
    }

    #[test]
    fn clear_scenes_do_not_overlap() {
        for seed in 0..50 {
            let cfg = SceneConfig {
                num_instances: (20, 20),
                ..SceneConfig::default().with_seed(seed)
            };
            let scene = generate_scene(&cfg).unwrap();
            assert_eq!(scene.len(), 20);
            assert_eq!(overlap_fraction(&scene, cfg.aspect, 1e-12), 0.0);
        }
    }

    #[test]
    fn infeasible_is_error() {
        let cfg = SceneConfig {
            image_size: (100, 100),
            num_instances: (30, 30),
            height_range: (60.0, 80.0),
            ..Default::default()
        };
        assert!(matches!(generate_scene(&cfg), Err(TllError::InfeasibleScene(_))));
    }

    #[test]
    fn invalid_config() {
        let cfg = SceneConfig {
            occlusion_cluster_prob: 1.5,
            ..Default::default()
        };
        assert!(generate_scene(&cfg).is_err());
        assert!(SceneConfig::preset("nope").is_err());
    }
}
