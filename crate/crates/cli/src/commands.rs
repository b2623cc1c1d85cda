use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use tll_core::decoder::TemporalMode;
use tll_core::encoder::{encode_maps, MapTriple};
use tll_core::eval::{curves_to_svg, evaluate, ProtocolReport};
use tll_core::formats::{parse_annotations, parse_detections, write_annotations, write_detections, Frames};
use tll_core::pipeline::{
    aggregate_window, derive_seed, detect, run_benchmark, run_temporal_benchmark, TemporalBenchConfig,
};
use tll_core::simgen::{degrade, generate_scene};
use tll_core::{Annotation, TllError};

use crate::config::RunConfig;
use crate::maps_io::{list_frames, read_triple, write_triple};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn load_annotations(path: &Path) -> Result<Frames<Annotation>> {
    parse_annotations(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Renders ground-truth maps for every frame of an annotation file.
/// Returns the number of frames written.
pub fn encode(cfg: &RunConfig, annotations: &Path, out_dir: &Path) -> Result<usize> {
    let frames = load_annotations(annotations)?;
    if frames.is_empty() {
        log::warn!("{} contains no annotations; no maps written", annotations.display());
        return Ok(0);
    }
    create_dir(out_dir)?;
    let shape = cfg.encoder.map_shape(cfg.scene.image_size);
    let rendered: Vec<(u64, MapTriple)> = frames
        .par_iter()
        .map(|(&id, anns)| {
            let maps = encode_maps(anns, shape, &cfg.encoder).with_context(|| format!("encoding frame {id}"))?;
            Ok((id, maps))
        })
        .collect::<Result<_>>()?;
    for (id, maps) in &rendered {
        write_triple(out_dir, *id, maps)?;
    }
    Ok(rendered.len())
}

/// Decodes every frame in `maps_dir` into a detection table.
pub fn decode(cfg: &RunConfig, maps_dir: &Path) -> Result<String> {
    let ids = list_frames(maps_dir)?;
    let maps: Vec<MapTriple> = ids
        .par_iter()
        .map(|&id| read_triple(maps_dir, id))
        .collect::<Result<_>>()?;
    let temporal: Option<TemporalMode> = cfg.decode.temporal.as_deref().map(str::parse).transpose()?;
    let mrf = cfg.decode.mrf.then_some(&cfg.mrf);

    let dets: Vec<_> = (0..maps.len())
        .into_par_iter()
        .map(|t| {
            let frame = match temporal {
                Some(mode) => std::borrow::Cow::Owned(aggregate_window(&maps, t, cfg.decode.window, mode)?),
                None => std::borrow::Cow::Borrowed(&maps[t]),
            };
            detect(&frame, &cfg.encoder, &cfg.decoder, mrf, cfg.decode.aspect)
                .with_context(|| format!("decoding frame {}", ids[t]))
        })
        .collect::<Result<_>>()?;
    let table: Frames<_> = ids.into_iter().zip(dets).collect();
    Ok(write_detections(&table))
}

/// Per-protocol reports plus human-readable summary lines.
pub struct EvalOutput {
    pub reports: Vec<ProtocolReport>,
    pub summary: String,
}

pub fn eval(cfg: &RunConfig, detections: &Path, annotations: &Path) -> Result<EvalOutput> {
    let dets =
        parse_detections(&read_text(detections)?).with_context(|| format!("parsing {}", detections.display()))?;
    let gts = load_annotations(annotations)?;

    let det_ids: BTreeSet<u64> = dets.keys().copied().collect();
    let gt_ids: BTreeSet<u64> = gts.keys().copied().collect();
    let no_dets: Vec<String> = gt_ids.difference(&det_ids).map(u64::to_string).collect();
    let no_gts: Vec<String> = det_ids.difference(&gt_ids).map(u64::to_string).collect();
    if !no_dets.is_empty() || !no_gts.is_empty() {
        let mut msg = String::from("frame ids do not align");
        if !no_dets.is_empty() {
            let _ = write!(msg, "; missing from detections: {}", no_dets.join(", "));
        }
        if !no_gts.is_empty() {
            let _ = write!(msg, "; missing from annotations: {}", no_gts.join(", "));
        }
        bail!(msg);
    }

    let frames: Vec<_> = gts
        .iter()
        .map(|(id, anns)| (dets[id].iter().map(|d| d.bbox).collect(), anns.clone()))
        .collect();
    let mut reports = Vec::new();
    let mut summary = String::new();
    for protocol in cfg.eval.resolve()? {
        match evaluate(&frames, &protocol) {
            Ok(r) => {
                let _ = writeln!(summary, "{}\t{:.4}%", r.protocol.name, 100.0 * r.log_average_miss_rate);
                reports.push(r);
            }
            Err(TllError::EmptyProtocol(_)) => {
                log::warn!("protocol {} admits no ground truth; skipped", protocol.name);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(EvalOutput { reports, summary })
}

pub fn write_eval_files(out: &EvalOutput, out_dir: &Path, svg: bool) -> Result<()> {
    create_dir(out_dir)?;
    let mut csv = String::from("protocol,log_average_miss_rate\n");
    for r in &out.reports {
        let _ = writeln!(csv, "{},{:.8}", r.protocol.name, r.log_average_miss_rate);
        write_text(
            &out_dir.join(format!("{}_curve.csv", r.protocol.name)),
            &r.curve.to_csv(),
        )?;
        if svg {
            let plot = curves_to_svg(
                &r.protocol.name,
                &[(r.protocol.name.as_str(), &r.curve, r.log_average_miss_rate)],
            );
            write_text(&out_dir.join(format!("{}.svg", r.protocol.name)), &plot)?;
        }
    }
    write_text(&out_dir.join("summary.csv"), &csv)
}

/// Writes `annotations.tsv` and `maps/` under `out_dir`. With
/// `static_scene`, all frames share one scene and differ only in their
/// degradation.
pub fn simulate(cfg: &RunConfig, out_dir: &Path, num_frames: usize, static_scene: bool) -> Result<()> {
    let seed = cfg.scene.rng_seed;
    let shape = cfg.encoder.map_shape(cfg.scene.image_size);
    let frames: Vec<(Vec<Annotation>, MapTriple)> = (0..num_frames as u64)
        .into_par_iter()
        .map(|t| {
            let scene_index = if static_scene { 0 } else { t };
            let scene = cfg.scene.clone().with_seed(derive_seed(seed, scene_index, 0));
            let anns = generate_scene(&scene).with_context(|| format!("frame {t}"))?;
            let clean = encode_maps(&anns, shape, &cfg.encoder)?;
            let maps = degrade(&clean, &anns, &cfg.encoder, &cfg.degrade, derive_seed(seed, t, 1))?;
            Ok((anns, maps))
        })
        .collect::<Result<_>>()?;

    let maps_dir = out_dir.join("maps");
    create_dir(&maps_dir)?;
    let mut table = Frames::new();
    for (t, (anns, maps)) in frames.into_iter().enumerate() {
        write_triple(&maps_dir, t as u64, &maps)?;
        table.insert(t as u64, anns);
    }
    write_text(&out_dir.join("annotations.tsv"), &write_annotations(&table))
}

pub fn bench(cfg: &RunConfig, temporal: Option<TemporalMode>) -> Result<String> {
    let protocols = cfg.eval.resolve()?;
    let reports = run_benchmark(&cfg.bench, &cfg.encoder, &cfg.decoder, &cfg.mrf, &protocols)?;
    let mut out = String::new();
    for r in &reports {
        let _ = writeln!(out, "{}\t{:.4}%", r.protocol.name, 100.0 * r.log_average_miss_rate);
    }
    if let Some(mode) = temporal {
        let tcfg = TemporalBenchConfig {
            seed: cfg.bench.seed,
            num_scenes: cfg.bench.num_scenes,
            ..TemporalBenchConfig::default()
        };
        let all = tll_core::eval::Protocol::all();
        let r = run_temporal_benchmark(&tcfg, mode, &cfg.encoder, &cfg.decoder, &all)?;
        let _ = writeln!(out, "temporal single-frame\t{:.4}%", 100.0 * r.single_frame);
        let _ = writeln!(out, "temporal aggregated\t{:.4}%", 100.0 * r.aggregated);
    }
    Ok(out)
}
