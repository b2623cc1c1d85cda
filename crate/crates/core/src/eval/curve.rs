//! Miss rate against false positives per image, and its log-average summary.

use crate::error::{Result, TllError};

use super::matching::{ImageResult, Outcome};

/// Lowest miss rate allowed into the logarithm.
pub const MISS_RATE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Detections with `score >= threshold` are kept.
    pub threshold: f64,
    pub fppi: f64,
    pub miss_rate: f64,
}

/// Operating points ordered by decreasing threshold, so fppi is
/// non-decreasing and miss rate non-increasing along the list. The first
/// point is always the empty detector (`threshold = +inf`).
#[derive(Debug, Clone, PartialEq)]
pub struct MrFppiCurve {
    pub points: Vec<CurvePoint>,
}

impl MrFppiCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fppi,miss_rate\n");
        for p in &self.points {
            s.push_str(&format!("{},{:.8},{:.8}\n", p.threshold, p.fppi, p.miss_rate));
        }
        s
    }
}

/// Sweeps the score threshold over every distinct detection score.
pub fn mr_fppi(results: &[ImageResult], num_images: usize) -> Result<MrFppiCurve> {
    if num_images == 0 {
        return Err(TllError::InvalidConfig("at least one image is required".into()));
    }
    let total_gt: usize = results.iter().map(|r| r.num_gt).sum();
    if total_gt == 0 {
        return Err(TllError::EmptyProtocol("no ground-truth instances".into()));
    }

    let mut all: Vec<(f64, Outcome)> = results
        .iter()
        .flat_map(|r| r.detections.iter().copied())
        .filter(|d| d.1 != Outcome::Ignored)
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));

    let n_img = num_images as f64;
    let n_gt = total_gt as f64;
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        fppi: 0.0,
        miss_rate: 1.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let score = all[i].0;
        while i < all.len() && all[i].0 == score {
            match all[i].1 {
                Outcome::TruePositive => tp += 1,
                Outcome::FalsePositive => fp += 1,
                Outcome::Ignored => {}
            }
            i += 1;
        }
        points.push(CurvePoint {
            threshold: score,
            fppi: fp as f64 / n_img,
            miss_rate: 1.0 - tp as f64 / n_gt,
        });
    }
    Ok(MrFppiCurve { points })
}

/// The nine reference FPPI values, log-spaced over `[1e-2, 1e0]`.
pub fn reference_fppi() -> [f64; 9] {
    std::array::from_fn(|k| 10f64.powf(-2.0 + 2.0 * k as f64 / 8.0))
}

/// Geometric mean of the miss rate sampled at [`reference_fppi`]. Each
/// reference takes the miss rate of the last operating point whose fppi does
/// not exceed it. Samples are floored at [`MISS_RATE_FLOOR`] before the
/// logarithm, except that a curve with every sample at zero averages to
/// exactly zero.
pub fn log_average_miss_rate(curve: &MrFppiCurve) -> f64 {
    let Some(first) = curve.points.first() else {
        return 1.0;
    };
    let samples = reference_fppi().map(|r| {
        curve
            .points
            .iter()
            .take_while(|p| p.fppi <= r)
            .last()
            .unwrap_or(first)
            .miss_rate
    });
    if samples.iter().all(|&mr| mr <= 0.0) {
        return 0.0;
    }
    let sum_ln: f64 = samples.iter().map(|mr| mr.max(MISS_RATE_FLOOR).ln()).sum();
    (sum_ln / samples.len() as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Outcome::*;

    fn img(dets: &[(f64, Outcome)], num_gt: usize) -> ImageResult {
        let tp = dets.iter().filter(|d| d.1 == TruePositive).count();
        ImageResult {
            detections: dets.to_vec(),
            num_gt,
            false_negatives: num_gt - tp,
        }
    }

    #[test]
    fn perfect_and_empty_detectors() {
        let perfect = [
            img(&[(0.9, TruePositive)], 1),
            img(&[(0.8, TruePositive), (0.7, TruePositive)], 2),
        ];
        let c = mr_fppi(&perfect, 2).unwrap();
        assert_eq!(log_average_miss_rate(&c), 0.0);

        let empty = [img(&[], 1), img(&[], 2)];
        assert_eq!(log_average_miss_rate(&mr_fppi(&empty, 2).unwrap()), 1.0);
    }

    #[test]
    fn partial_zero_samples_are_floored() {
        // MR reaches 0 only at fppi 1, so exactly one sample is zero.
        let r = img(&[(0.9, FalsePositive), (0.8, TruePositive)], 1);
        let c = mr_fppi(&[r], 1).unwrap();
        let expected = (MISS_RATE_FLOOR.ln() / 9.0).exp();
        assert!((log_average_miss_rate(&c) - expected).abs() < 1e-15);
    }

    #[test]
    fn no_ground_truth_is_error() {
        let err = mr_fppi(&[img(&[(0.5, FalsePositive)], 0)], 1).unwrap_err();
        assert!(err.to_string().starts_with("empty protocol"));
    }

    #[test]
    fn ignored_detections_do_not_move_curve() {
        let a = mr_fppi(&[img(&[(0.9, TruePositive)], 2)], 1).unwrap();
        let b = mr_fppi(&[img(&[(0.95, Ignored), (0.9, TruePositive)], 2)], 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reference_points() {
        let r = reference_fppi();
        assert!((r[0] - 0.01).abs() < 1e-15 && (r[8] - 1.0).abs() < 1e-15);
        assert!((r[4] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let c = mr_fppi(&[img(&[(0.5, TruePositive)], 1)], 1).unwrap();
        assert_eq!(
            c.to_csv(),
            "threshold,fppi,miss_rate\ninf,0.00000000,1.00000000\n0.5,0.00000000,0.00000000\n"
        );
    }
}
