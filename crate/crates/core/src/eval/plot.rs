use std::fmt::Write;

use super::curve::MrFppiCurve;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const FPPI_RANGE: (f64, f64) = (1e-3, 1e1);
const MR_RANGE: (f64, f64) = (0.05, 1.0);
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn log_pos(v: f64, (lo, hi): (f64, f64)) -> f64 {
    let v = v.clamp(lo, hi);
    (v.ln() - lo.ln()) / (hi.ln() - lo.ln())
}

fn px(fppi: f64) -> f64 {
    MARGIN + log_pos(fppi, FPPI_RANGE) * (WIDTH - 2.0 * MARGIN)
}

fn py(mr: f64) -> f64 {
    HEIGHT - MARGIN - log_pos(mr, MR_RANGE) * (HEIGHT - 2.0 * MARGIN)
}

/// Log-log MR-FPPI plot. Each entry is `(label, curve, log-average MR)`.
pub fn curves_to_svg(title: &str, curves: &[(&str, &MrFppiCurve, f64)]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    for e in -3..=1 {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{e}</text>"##,
            MARGIN,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 16.0
        );
    }
    for mr in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.64, 0.8, 1.0] {
        let y = py(mr);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{mr}</text>"##,
            MARGIN,
            WIDTH - MARGIN,
            MARGIN - 4.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">false positives per image</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">miss rate</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (k, (label, curve, mr)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        // staircase: hold the miss rate until the next operating point
        let mut d = String::new();
        let mut prev: Option<(f64, f64)> = None;
        for p in &curve.points {
            let (x, y) = (px(p.fppi.max(FPPI_RANGE.0)), py(p.miss_rate));
            match prev {
                None => {
                    let _ = write!(d, "M{x:.2},{y:.2}");
                }
                Some((_, py_prev)) => {
                    let _ = write!(d, " L{x:.2},{py_prev:.2} L{x:.2},{y:.2}");
                }
            }
            prev = Some((x, y));
        }
        if let Some((_, y)) = prev {
            let _ = write!(d, " L{:.2},{y:.2}", WIDTH - MARGIN);
        }
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        let ly = MARGIN + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" text-anchor="end" fill="{color}">{:.2}% {}</text>"#,
            WIDTH - MARGIN - 6.0,
            100.0 * mr,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::curve::CurvePoint;

    #[test]
    fn renders_one_path_per_curve() {
        let c = MrFppiCurve {
            points: vec![
                CurvePoint {
                    threshold: f64::INFINITY,
                    fppi: 0.0,
                    miss_rate: 1.0,
                },
                CurvePoint {
                    threshold: 0.5,
                    fppi: 0.1,
                    miss_rate: 0.3,
                },
            ],
        };
        let svg = curves_to_svg("a <b>", &[("x", &c, 0.3), ("y", &c, 0.3)]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("a &lt;b&gt;"));
    }
}
