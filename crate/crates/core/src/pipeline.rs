//! End-to-end glue: maps to detections, line-level scoring against ground
//! truth, and the seeded synthetic benchmarks.

use serde::{Deserialize, Serialize};

use crate::decoder::{aggregate_sequence, candidates, DecoderConfig, TemporalMode};
use crate::encoder::{encode_maps, EncoderConfig, MapTriple};
use crate::error::{Result, TllError};
use crate::eval::{evaluate, line_to_box, Protocol, ProtocolReport};
use crate::formats::Detection;
use crate::geom::{Annotation, BBox, TopoLine};
use crate::mrf::{refine, MrfConfig};
use crate::simgen::{degrade, generate_scene, DegradeConfig, SceneConfig};

/// Decodes one frame, optionally with MRF refinement, and returns lines and
/// boxes in image pixels.
pub fn detect(
    maps: &MapTriple,
    enc: &EncoderConfig,
    dec: &DecoderConfig,
    mrf: Option<&MrfConfig>,
    aspect: f64,
) -> Result<Vec<Detection>> {
    let mut cands = candidates(maps, dec)?;
    if let Some(m) = mrf {
        cands = refine(&cands, m)?;
    }
    let stride = enc.stride();
    cands
        .assign(dec)
        .into_iter()
        .filter(|l| l.length() > 0.0)
        .map(|l| {
            let line = l.scaled(stride);
            Ok(Detection {
                line,
                bbox: line_to_box(&line, aspect)?,
            })
        })
        .collect()
}

/// Aggregates the trailing window `frames[t + 1 - window ..= t]`, clipped at
/// the start of the sequence.
pub fn aggregate_window(frames: &[MapTriple], t: usize, window: usize, mode: TemporalMode) -> Result<MapTriple> {
    if window == 0 {
        return Err(TllError::InvalidConfig("temporal window must be >= 1".into()));
    }
    if t >= frames.len() {
        return Err(TllError::EmptySequence);
    }
    let start = (t + 1).saturating_sub(window);
    aggregate_sequence(&frames[start..=t], mode)
}

/// One-to-one pairing of detected lines with ground truth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineMatch {
    /// `(detection, annotation, endpoint error)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_annotations: Vec<usize>,
}

impl LineMatch {
    pub fn max_endpoint_error(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).fold(0.0, f64::max)
    }
}

/// Larger of the two vertex distances.
pub fn endpoint_error(line: &TopoLine, gt: &TopoLine) -> f64 {
    line.top.distance(&gt.top).max(line.bottom.distance(&gt.bottom))
}

/// Greedy pairing in ascending endpoint error; pairs with error above
/// `tolerance` are never formed. Ties break on the lower indices.
pub fn match_lines(lines: &[TopoLine], gts: &[Annotation], tolerance: f64) -> LineMatch {
    let mut cand: Vec<(f64, usize, usize)> = lines
        .iter()
        .enumerate()
        .flat_map(|(d, l)| {
            gts.iter()
                .enumerate()
                .map(move |(g, a)| (endpoint_error(l, &a.line), d, g))
        })
        .filter(|c| c.0 <= tolerance)
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut det_used = vec![false; lines.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for (e, d, g) in cand {
        if !det_used[d] && !gt_used[g] {
            det_used[d] = true;
            gt_used[g] = true;
            pairs.push((d, g, e));
        }
    }
    pairs.sort_by_key(|p| p.0);
    LineMatch {
        pairs,
        unmatched_detections: (0..lines.len()).filter(|&d| !det_used[d]).collect(),
        unmatched_annotations: (0..gts.len()).filter(|&g| !gt_used[g]).collect(),
    }
}

fn nearest(p: &crate::geom::Point, gts: &[Annotation], top: bool, tolerance: f64) -> Option<usize> {
    gts.iter()
        .enumerate()
        .map(|(g, a)| (g, p.distance(if top { &a.line.top } else { &a.line.bottom })))
        .filter(|&(_, d)| d <= tolerance)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(g, _)| g)
}

/// Detections whose top and bottom vertices are each attributed (nearest
/// within `tolerance`) to ground truth, but to different instances.
pub fn mismatch_count(lines: &[TopoLine], gts: &[Annotation], tolerance: f64) -> usize {
    lines
        .iter()
        .filter(|l| {
            match (
                nearest(&l.top, gts, true, tolerance),
                nearest(&l.bottom, gts, false, tolerance),
            ) {
                (Some(t), Some(b)) => t != b,
                _ => false,
            }
        })
        .count()
}

/// Seed of the `stream`-th independent draw belonging to scene `index`.
pub fn derive_seed(base: u64, index: u64, stream: u64) -> u64 {
    // splitmix64 finaliser over a simple combination; bijective per input
    let mut z = base
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scene, clean maps and the degraded copy for one simulated frame.
pub struct SimFrame {
    pub annotations: Vec<Annotation>,
    pub clean: MapTriple,
    pub maps: MapTriple,
}

pub fn simulate_frame(
    scene: &SceneConfig,
    deg: &DegradeConfig,
    enc: &EncoderConfig,
    degrade_seed: u64,
) -> Result<SimFrame> {
    let annotations = generate_scene(scene)?;
    let clean = encode_maps(&annotations, enc.map_shape(scene.image_size), enc)?;
    let maps = degrade(&clean, &annotations, enc, deg, degrade_seed)?;
    Ok(SimFrame {
        annotations,
        clean,
        maps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub num_scenes: usize,
    pub scene_preset: String,
    pub degrade_preset: String,
    pub use_mrf: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            num_scenes: 100,
            scene_preset: "default".into(),
            degrade_preset: "mild".into(),
            use_mrf: true,
        }
    }
}

fn boxes(dets: &[Detection]) -> Vec<BBox> {
    dets.iter().map(|d| d.bbox).collect()
}

/// Simulates `num_scenes` degraded frames and evaluates every protocol.
pub fn run_benchmark(
    cfg: &BenchConfig,
    enc: &EncoderConfig,
    dec: &DecoderConfig,
    mrf: &MrfConfig,
    protocols: &[Protocol],
) -> Result<Vec<ProtocolReport>> {
    let scene_base = SceneConfig::preset(&cfg.scene_preset)?;
    let deg = DegradeConfig::preset(&cfg.degrade_preset)?;
    let mut frames = Vec::with_capacity(cfg.num_scenes);
    for i in 0..cfg.num_scenes as u64 {
        let scene = scene_base.clone().with_seed(derive_seed(cfg.seed, i, 0));
        let f = simulate_frame(&scene, &deg, enc, derive_seed(cfg.seed, i, 1))?;
        let dets = detect(&f.maps, enc, dec, cfg.use_mrf.then_some(mrf), scene.aspect)?;
        frames.push((boxes(&dets), f.annotations));
    }
    protocols.iter().map(|p| evaluate(&frames, p)).collect()
}

/// Static scenes observed over several frames, each frame losing instances
/// to independent peak dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalBenchConfig {
    pub seed: u64,
    pub num_scenes: usize,
    pub num_frames: usize,
    pub scene_preset: String,
    pub degrade: DegradeConfig,
}

impl Default for TemporalBenchConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            num_scenes: 100,
            num_frames: 5,
            scene_preset: "clear".into(),
            degrade: DegradeConfig {
                peak_dropout_prob: 0.3,
                ..DegradeConfig::preset("mild").expect("known preset")
            },
        }
    }
}

/// Log-average miss rates of the last frame decoded alone and decoded from
/// the aggregate of the whole window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalBenchReport {
    pub single_frame: f64,
    pub aggregated: f64,
}

pub fn run_temporal_benchmark(
    cfg: &TemporalBenchConfig,
    mode: TemporalMode,
    enc: &EncoderConfig,
    dec: &DecoderConfig,
    protocol: &Protocol,
) -> Result<TemporalBenchReport> {
    if cfg.num_frames == 0 {
        return Err(TllError::EmptySequence);
    }
    let scene_base = SceneConfig::preset(&cfg.scene_preset)?;
    let mut single = Vec::with_capacity(cfg.num_scenes);
    let mut aggregated = Vec::with_capacity(cfg.num_scenes);
    for i in 0..cfg.num_scenes as u64 {
        let scene = scene_base.clone().with_seed(derive_seed(cfg.seed, i, 0));
        let annotations = generate_scene(&scene)?;
        let clean = encode_maps(&annotations, enc.map_shape(scene.image_size), enc)?;
        let seq = (0..cfg.num_frames as u64)
            .map(|t| degrade(&clean, &annotations, enc, &cfg.degrade, derive_seed(cfg.seed, i, 1 + t)))
            .collect::<Result<Vec<_>>>()?;
        let last = seq.len() - 1;
        let alone = detect(&seq[last], enc, dec, None, scene.aspect)?;
        let agg = aggregate_window(&seq, last, seq.len(), mode)?;
        let joint = detect(&agg, enc, dec, None, scene.aspect)?;
        single.push((boxes(&alone), annotations.clone()));
        aggregated.push((boxes(&joint), annotations));
    }
    Ok(TemporalBenchReport {
        single_frame: evaluate(&single, protocol)?.log_average_miss_rate,
        aggregated: evaluate(&aggregated, protocol)?.log_average_miss_rate,
    })
}
