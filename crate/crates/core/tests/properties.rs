//! Property tests for invariants that span modules.

use ndarray::Array2;
use proptest::prelude::*;

use modefuse::appusage::unify_domain;
use modefuse::ingest::{extract_trips, tfidf, NetworkEvent, Tower, TowerSet};
use modefuse::priors::ModeSplit;
use modefuse::stats::pearson;

fn tower_grid() -> TowerSet {
    let towers = (0..9)
        .map(|i| Tower {
            id: format!("T{i}"),
            x_m: (i % 3) as f64 * 500.0,
            y_m: (i / 3) as f64 * 500.0,
            municipality: format!("M{}", i % 2),
        })
        .collect();
    TowerSet::new(towers).unwrap()
}

/// (tower index, gap seconds) pairs turned into one device's stream.
fn stream(device: &str, start: i64, steps: &[(usize, i64)]) -> Vec<NetworkEvent> {
    let mut ts = start;
    let mut out = Vec::with_capacity(steps.len());
    for (tower, gap) in steps {
        ts += gap;
        out.push(NetworkEvent {
            device: device.to_string(),
            tower: format!("T{tower}"),
            timestamp: ts,
        });
    }
    out
}

proptest! {
    #[test]
    fn extraction_is_per_device_independent(
        steps_a in prop::collection::vec((0usize..9, 30i64..2000), 0..40),
        steps_b in prop::collection::vec((0usize..9, 30i64..2000), 0..40),
    ) {
        let towers = tower_grid();
        let a = stream("a", 1000, &steps_a);
        let b = stream("b", 1000, &steps_b);
        let mut concat = a.clone();
        concat.extend(b.clone());

        let mut separate = extract_trips(&a, &towers).unwrap();
        separate.extend(extract_trips(&b, &towers).unwrap());
        let joint = extract_trips(&concat, &towers).unwrap();
        prop_assert_eq!(joint, separate);
    }

    #[test]
    fn tfidf_preserves_zero_pattern_and_sign(
        raw in prop::collection::vec(0u32..50, 24),
    ) {
        let counts = Array2::from_shape_vec((4, 6), raw.iter().map(|&v| v as f64).collect()).unwrap();
        let weighted = tfidf(&counts);
        for (w, c) in weighted.iter().zip(counts.iter()) {
            prop_assert!(*w >= 0.0);
            prop_assert_eq!(*w == 0.0, *c == 0.0);
        }
    }

    #[test]
    fn pearson_is_invariant_under_positive_affine_maps(
        xs in prop::collection::vec(0.0f64..100.0, 5..40),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        // need variation in x
        prop_assume!(xs.iter().any(|v| (v - xs[0]).abs() > 1e-6));
        let ys: Vec<f64> = xs.iter().rev().cloned().collect();
        prop_assume!(ys.iter().zip(&xs).any(|(a, b)| (a - b).abs() > 1e-6));

        let r = match pearson(&xs, &ys) {
            Ok(r) => r,
            Err(_) => return Ok(()), // constant after reversal
        };
        let mapped: Vec<f64> = xs.iter().map(|v| v * scale + shift).collect();
        let r_mapped = pearson(&mapped, &ys).unwrap();
        prop_assert!((r - r_mapped).abs() < 1e-9);

        let negated: Vec<f64> = xs.iter().map(|v| -v).collect();
        let r_neg = pearson(&negated, &ys).unwrap();
        prop_assert!((r + r_neg).abs() < 1e-9);
    }

    #[test]
    fn domain_unification_is_idempotent(
        labels in prop::collection::vec("[a-z]{1,8}", 1..5),
    ) {
        let raw = labels.join(".");
        let suffixes = vec!["co.uk".to_string()];
        let once = unify_domain(&raw, &suffixes).unwrap();
        let twice = unify_domain(&once, &suffixes).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn defined_share_rows_sum_to_one(
        raw in prop::collection::vec(0.0f64..1000.0, 20),
    ) {
        let counts = Array2::from_shape_vec((5, 4), raw).unwrap();
        prop_assume!(counts.sum() > 0.0);
        let split = ModeSplit::new(
            (0..5).map(|i| format!("m{i}")).collect(),
            counts,
        ).unwrap();
        let shares = modefuse::fusion::mode_shares(&split).unwrap();
        let city: f64 = shares.citywide.iter().sum();
        prop_assert!((city - 1.0).abs() < 1e-12);
        for row in shares.per_municipality.rows() {
            let s: f64 = row.sum();
            prop_assert!(s.is_nan() || (s - 1.0).abs() < 1e-12);
        }
    }
}
