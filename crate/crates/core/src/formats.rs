//! Tab-separated text formats for annotations and detections.
//!
//! Both formats hold one instance per row, keyed by an integer frame id.
//! `#` starts a comment. A comment of the form `# frame: <id>` declares a
//! frame without requiring any rows, so that empty frames survive a round
//! trip.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Result, TllError};
use crate::geom::{Annotation, BBox, Point, TopoLine};

pub type FrameId = u64;

/// Rows grouped by frame, in ascending frame order.
pub type Frames<T> = BTreeMap<FrameId, Vec<T>>;

/// A decoded pedestrian: its line and the box synthesised from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub line: TopoLine,
    pub bbox: BBox,
}

const ANNOTATION_HEADER: &str = "# frame_id\ttop_x\ttop_y\tbot_x\tbot_y\tocclusion\tignore";
const DETECTION_HEADER: &str = "# frame_id\ttop_x\ttop_y\tbot_x\tbot_y\tcx\tcy\tw\th\tscore";

fn frame_declaration(line: &str) -> Option<&str> {
    line.trim_start_matches('#')
        .trim()
        .strip_prefix("frame:")
        .map(str::trim)
}

/// Splits `text` into numbered data rows, registering declared frames in
/// `frames` along the way.
fn rows<'a, T>(text: &'a str, frames: &mut Frames<T>) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(id) = frame_declaration(line) {
                let id = parse_frame(id, line_no)?;
                frames.entry(id).or_default();
            }
            continue;
        }
        out.push((line_no, line.split('\t').map(str::trim).collect()));
    }
    Ok(out)
}

fn parse_err(line: usize, message: impl Into<String>) -> TllError {
    TllError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_frame(s: &str, line: usize) -> Result<FrameId> {
    s.parse()
        .map_err(|_| parse_err(line, format!("invalid frame id {s:?}")))
}

fn parse_f64(s: &str, field: &str, line: usize) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("invalid {field} {s:?}"))),
    }
}

fn expect_fields(fields: &[&str], n: usize, line: usize) -> Result<()> {
    if fields.len() == n {
        Ok(())
    } else {
        Err(parse_err(
            line,
            format!("expected {n} tab-separated fields, found {}", fields.len()),
        ))
    }
}

pub fn parse_annotations(text: &str) -> Result<Frames<Annotation>> {
    let mut frames = Frames::new();
    for (line, f) in rows(text, &mut frames)? {
        expect_fields(&f, 7, line)?;
        let frame = parse_frame(f[0], line)?;
        let top = Point::new(parse_f64(f[1], "top_x", line)?, parse_f64(f[2], "top_y", line)?);
        let bottom = Point::new(parse_f64(f[3], "bot_x", line)?, parse_f64(f[4], "bot_y", line)?);
        let occlusion = parse_f64(f[5], "occlusion fraction", line)?;
        if !(0.0..=1.0).contains(&occlusion) {
            return Err(parse_err(
                line,
                format!("occlusion fraction {occlusion} outside [0, 1]"),
            ));
        }
        let ignore = match f[6] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("ignore flag must be 0 or 1, found {other:?}"))),
        };
        if top == bottom {
            return Err(parse_err(line, "top and bottom vertices coincide"));
        }
        let ann = Annotation::new(top, bottom)
            .with_occlusion(occlusion)
            .with_ignore(ignore);
        frames.entry(frame).or_default().push(ann);
    }
    Ok(frames)
}

pub fn write_annotations(frames: &Frames<Annotation>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{ANNOTATION_HEADER}");
    for (id, anns) in frames {
        let _ = writeln!(s, "# frame: {id}");
        for a in anns {
            let l = &a.line;
            let _ = writeln!(
                s,
                "{id}\t{}\t{}\t{}\t{}\t{}\t{}",
                l.top.x,
                l.top.y,
                l.bottom.x,
                l.bottom.y,
                a.occlusion_fraction,
                u8::from(a.ignore)
            );
        }
    }
    s
}

pub fn parse_detections(text: &str) -> Result<Frames<Detection>> {
    let mut frames = Frames::new();
    for (line, f) in rows(text, &mut frames)? {
        expect_fields(&f, 10, line)?;
        let frame = parse_frame(f[0], line)?;
        let names = ["top_x", "top_y", "bot_x", "bot_y", "cx", "cy", "w", "h", "score"];
        let mut v = [0.0; 9];
        for (k, name) in names.iter().enumerate() {
            v[k] = parse_f64(f[k + 1], name, line)?;
        }
        if v[6] < 0.0 || v[7] < 0.0 {
            return Err(parse_err(line, "box width and height must be non-negative"));
        }
        let det = Detection {
            line: TopoLine::new(Point::new(v[0], v[1]), Point::new(v[2], v[3]), v[8]),
            bbox: BBox::new(v[4], v[5], v[6], v[7], v[8]),
        };
        frames.entry(frame).or_default().push(det);
    }
    Ok(frames)
}

pub fn write_detections(frames: &Frames<Detection>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{DETECTION_HEADER}");
    for (id, dets) in frames {
        let _ = writeln!(s, "# frame: {id}");
        for d in dets {
            let (l, b) = (&d.line, &d.bbox);
            let _ = writeln!(
                s,
                "{id}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                l.top.x, l.top.y, l.bottom.x, l.bottom.y, b.cx, b.cy, b.w, b.h, l.score
            );
        }
    }
    s
}
