use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::encoder::{splat_gaussian, EncoderConfig, MapTriple};
use crate::error::{Result, TllError};
use crate::geom::Annotation;
use crate::grid::{ScalarGrid, VectorField};

/// Corruptions applied to clean maps to imitate network prediction error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradeConfig {
    /// Std-dev of i.i.d. additive noise on every map value.
    pub gaussian_noise_sigma: f64,
    /// Box-blur half window in map cells (rounded).
    pub blur_radius: f64,
    /// Probability that an instance's vertex peaks are erased.
    pub peak_dropout_prob: f64,
    /// Height scale in pixels: peaks are multiplied by `exp(-c / height)`,
    /// so small instances fade the most.
    pub confidence_attenuation: f64,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        Self::none()
    }
}

impl DegradeConfig {
    pub fn none() -> Self {
        Self {
            gaussian_noise_sigma: 0.0,
            blur_radius: 0.0,
            peak_dropout_prob: 0.0,
            confidence_attenuation: 0.0,
        }
    }

    /// Named presets: `none`, `mild`, `heavy`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(Self::none()),
            "mild" => Ok(Self {
                gaussian_noise_sigma: 0.03,
                blur_radius: 0.0,
                peak_dropout_prob: 0.05,
                confidence_attenuation: 10.0,
            }),
            "heavy" => Ok(Self {
                gaussian_noise_sigma: 0.08,
                blur_radius: 1.0,
                peak_dropout_prob: 0.15,
                confidence_attenuation: 25.0,
            }),
            _ => Err(TllError::InvalidConfig(format!("unknown degrade preset {name:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.gaussian_noise_sigma >= 0.0
            && self.blur_radius >= 0.0
            && (0.0..=1.0).contains(&self.peak_dropout_prob)
            && self.confidence_attenuation >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(TllError::InvalidConfig(
                "degrade parameters must be non-negative, dropout in [0, 1]".into(),
            ))
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::none()
    }
}

/// Multiplies the neighbourhood of both vertices of `ann` by
/// `1 - (1 - keep) * g`, where `g` is the instance's own Gaussian. `keep = 0`
/// erases the peak; `keep = 1` is a no-op.
pub fn attenuate_instance(maps: &mut MapTriple, ann: &Annotation, keep: f64, enc: &EncoderConfig) {
    if keep >= 1.0 {
        return;
    }
    let stride = enc.stride();
    let sigma = enc.sigma.for_height(ann.height() / stride);
    let loss = 1.0 - keep;
    for (grid, p) in [(&mut maps.top, ann.line.top), (&mut maps.bottom, ann.line.bottom)] {
        splat_gaussian(grid, p.scaled(1.0 / stride), sigma, enc.truncate_sigmas, |v, g| {
            v * (1.0 - loss * g)
        });
    }
}

/// Applies dropout and height attenuation per instance, then blur, then
/// noise, then clamps scalars to [0, 1] and vectors to norm <= 1.
/// Deterministic in `seed`.
pub fn degrade(
    maps: &MapTriple,
    instances: &[Annotation],
    enc: &EncoderConfig,
    cfg: &DegradeConfig,
    seed: u64,
) -> Result<MapTriple> {
    cfg.validate()?;
    maps.check_shapes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = maps.clone();

    for ann in instances {
        let dropped = rng.gen_bool(cfg.peak_dropout_prob);
        let keep = if dropped {
            0.0
        } else if cfg.confidence_attenuation > 0.0 {
            (-cfg.confidence_attenuation / ann.height().max(f64::EPSILON)).exp()
        } else {
            1.0
        };
        attenuate_instance(&mut out, ann, keep, enc);
    }

    let r = cfg.blur_radius.round() as usize;
    if r > 0 {
        out.top = box_blur(&out.top, r);
        out.bottom = box_blur(&out.bottom, r);
        out.link = blur_field(&out.link, r);
    }

    if cfg.gaussian_noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.gaussian_noise_sigma).map_err(|e| TllError::InvalidConfig(e.to_string()))?;
        for v in out.top.values_mut().iter_mut().chain(out.bottom.values_mut()) {
            *v += normal.sample(&mut rng);
        }
        for v in out.link.values_mut() {
            v[0] += normal.sample(&mut rng);
            v[1] += normal.sample(&mut rng);
        }
    }

    for v in out.top.values_mut().iter_mut().chain(out.bottom.values_mut()) {
        *v = v.clamp(0.0, 1.0);
    }
    for v in out.link.values_mut() {
        let n = v[0].hypot(v[1]);
        if n > 1.0 {
            v[0] /= n;
            v[1] /= n;
        }
    }
    Ok(out)
}

/// Separable mean filter with a `(2r+1)`-wide window, truncated at borders.
pub fn box_blur(grid: &ScalarGrid, r: usize) -> ScalarGrid {
    let (w, h) = (grid.width(), grid.height());
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut dst = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let (c, len) = if horizontal { (x, w) } else { (y, h) };
                let lo = c.saturating_sub(r);
                let hi = (c + r).min(len - 1);
                let sum: f64 = (lo..=hi)
                    .map(|k| if horizontal { src[y * w + k] } else { src[k * w + x] })
                    .sum();
                dst[y * w + x] = sum / (hi - lo + 1) as f64;
            }
        }
        dst
    };
    let once = pass(grid.values(), true);
    let twice = pass(&once, false);
    ScalarGrid::from_vec(w, h, twice).expect("shape preserved")
}

fn blur_field(field: &VectorField, r: usize) -> VectorField {
    let (w, h) = (field.width(), field.height());
    let comp = |c: usize| {
        let g = ScalarGrid::from_vec(w, h, field.values().iter().map(|v| v[c]).collect()).expect("shape");
        box_blur(&g, r)
    };
    let (x, y) = (comp(0), comp(1));
    let values = x.values().iter().zip(y.values()).map(|(&a, &b)| [a, b]).collect();
    VectorField::from_vec(w, h, values).expect("shape preserved")
}
