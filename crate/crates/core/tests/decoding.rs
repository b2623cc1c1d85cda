use proptest::prelude::*;
use tll_core::decoder::{aggregate_sequence, assignment_score, decode, hungarian_assign, DecoderConfig, TemporalMode};
use tll_core::encoder::{encode_maps, EncoderConfig};
use tll_core::pipeline::{detect, match_lines, mismatch_count, simulate_frame};
use tll_core::simgen::{attenuate_instance, brute_force_assign, DegradeConfig, SceneConfig};
use tll_core::{Annotation, Point};

fn cells(anns: &[Annotation], stride: f64) -> Vec<Annotation> {
    anns.iter()
        .map(|a| Annotation {
            line: a.line.scaled(1.0 / stride),
            ..*a
        })
        .collect()
}

#[test]
fn five_separated_instances_pair_correctly() {
    let enc = EncoderConfig::default();
    let anns: Vec<Annotation> = (0..5)
        .map(|k| {
            let x = 60.0 + 120.0 * k as f64;
            let h = 60.0 + 25.0 * k as f64;
            Annotation::new(Point::new(x, 40.0), Point::new(x + 4.0, 40.0 + h))
        })
        .collect();
    let maps = encode_maps(&anns, enc.map_shape((640, 480)), &enc).unwrap();
    let lines = decode(&maps, &DecoderConfig::default()).unwrap();
    assert_eq!(lines.len(), 5);
    let m = match_lines(&lines, &cells(&anns, enc.stride()), 1.0);
    assert_eq!(m.pairs.len(), 5);
    assert!(m.max_endpoint_error() < 0.5);
}

#[test]
fn max_aggregation_recovers_a_dropped_instance() {
    let enc = EncoderConfig::default();
    let dec = DecoderConfig::default();
    let scene = SceneConfig::default().with_seed(4);
    let f = simulate_frame(&scene, &DegradeConfig::none(), &enc, 0).unwrap();
    assert!(f.annotations.len() >= 2);
    let mut dropped = f.clean.clone();
    attenuate_instance(&mut dropped, &f.annotations[0], 0.0, &enc);
    let seq = [f.clean.clone(), f.clean.clone(), dropped.clone()];

    let gts = cells(&f.annotations, enc.stride());
    let alone = match_lines(&decode(&dropped, &dec).unwrap(), &gts, 1.0).pairs.len();
    let agg = aggregate_sequence(&seq, TemporalMode::Max).unwrap();
    let joint = match_lines(&decode(&agg, &dec).unwrap(), &gts, 1.0).pairs.len();
    assert_eq!(alone, f.annotations.len() - 1);
    assert_eq!(joint, f.annotations.len());
}

#[test]
fn refinement_does_not_add_mismatches_on_an_occlusion_scene() {
    let enc = EncoderConfig::default();
    let dec = DecoderConfig::default();
    let mrf = tll_core::mrf::MrfConfig::default();
    let mut total = (0, 0);
    for seed in 0..40 {
        let scene = SceneConfig::preset("crowded").unwrap().with_seed(seed);
        let f = simulate_frame(&scene, &DegradeConfig::preset("mild").unwrap(), &enc, seed).unwrap();
        let lines = |m| -> Vec<_> {
            detect(&f.maps, &enc, &dec, m, 0.41)
                .unwrap()
                .iter()
                .map(|d| d.line)
                .collect()
        };
        total.0 += mismatch_count(&lines(None), &f.annotations, 8.0);
        total.1 += mismatch_count(&lines(Some(&mrf)), &f.annotations, 8.0);
    }
    assert!(total.1 <= total.0, "{total:?}");
}

fn score_matrix() -> impl Strategy<Value = (Vec<Vec<f64>>, f64)> {
    (0usize..=6, 0usize..=8).prop_flat_map(|(r, c)| {
        let cell =
            prop_oneof![1 => Just(f64::NEG_INFINITY), 6 => -0.5f64..1.0, 2 => (0u8..4).prop_map(|v| v as f64 / 4.0)];
        (
            proptest::collection::vec(proptest::collection::vec(cell, c), r),
            -0.3f64..0.7,
        )
    })
}

proptest! {
    #[test]
    fn hungarian_matches_exhaustive_search((m, min) in score_matrix()) {
        let fast = hungarian_assign(&m, min);
        let slow = brute_force_assign(&m, min).unwrap();
        prop_assert!((assignment_score(&m, &fast) - assignment_score(&m, &slow)).abs() <= 1e-9);
    }
}
