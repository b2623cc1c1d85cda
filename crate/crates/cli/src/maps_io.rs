//! One directory per map sequence: `<frame>_top.tllg`, `<frame>_bottom.tllg`
//! and `<frame>_link.tllg` per frame, frame ids zero-padded to six digits.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tll_core::encoder::MapTriple;
use tll_core::formats::FrameId;
use tll_core::grid::{ScalarGrid, VectorField};

const PARTS: [&str; 3] = ["top", "bottom", "link"];

fn part_path(dir: &Path, frame: FrameId, part: &str) -> PathBuf {
    dir.join(format!("{frame:06}_{part}.tllg"))
}

pub fn write_triple(dir: &Path, frame: FrameId, maps: &MapTriple) -> Result<()> {
    let blobs = [maps.top.to_bytes(), maps.bottom.to_bytes(), maps.link.to_bytes()];
    for (part, bytes) in PARTS.iter().zip(blobs) {
        let path = part_path(dir, frame, part);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn read_triple(dir: &Path, frame: FrameId) -> Result<MapTriple> {
    let read = |part: &str| -> Result<Vec<u8>> {
        let path = part_path(dir, frame, part);
        fs::read(&path).with_context(|| format!("missing map {}", path.display()))
    };
    let maps = MapTriple {
        top: ScalarGrid::from_bytes(&read("top")?).with_context(|| format!("frame {frame} top map"))?,
        bottom: ScalarGrid::from_bytes(&read("bottom")?).with_context(|| format!("frame {frame} bottom map"))?,
        link: VectorField::from_bytes(&read("link")?).with_context(|| format!("frame {frame} link field"))?,
    };
    maps.check_shapes().with_context(|| format!("frame {frame}"))?;
    Ok(maps)
}

/// Frame ids present in `dir`, ascending. Every frame must have all three
/// parts.
pub fn list_frames(dir: &Path) -> Result<Vec<FrameId>> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading map directory {}", dir.display()))?;
    let mut seen: [BTreeSet<FrameId>; 3] = Default::default();
    for entry in entries {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(stem) = name.strip_suffix(".tllg") else {
            continue;
        };
        let Some((id, part)) = stem.split_once('_') else {
            continue;
        };
        let (Some(k), Ok(id)) = (PARTS.iter().position(|p| *p == part), id.parse::<FrameId>()) else {
            continue;
        };
        seen[k].insert(id);
    }
    let all: BTreeSet<FrameId> = seen.iter().flatten().copied().collect();
    for (k, part) in PARTS.iter().enumerate() {
        let missing: Vec<String> = all.difference(&seen[k]).map(|f| f.to_string()).collect();
        if !missing.is_empty() {
            bail!("missing {part} maps for frame(s) {}", missing.join(", "));
        }
    }
    if all.is_empty() {
        bail!("no maps found in {}", dir.display());
    }
    Ok(all.into_iter().collect())
}
