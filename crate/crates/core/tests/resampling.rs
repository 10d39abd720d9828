mod common;

use common::oracles::{check_provenance, counts, labels_for};
use std::collections::BTreeMap;

use common::{random_l1_rows, STUDY_DOCUMENTS, STUDY_SEGMENTS};
use docroute::resampling::{class_targets, smote, OversampleMode, OversamplePolicy};
use docroute::Error;
use proptest::prelude::*;

#[test]
fn provenance_is_exact_and_neighbors_are_nearest() {
    let sizes = [12, 5, 30, 2];
    let labels = labels_for(&sizes);
    let m = random_l1_rows(labels.len(), 9, 3);
    let r = smote(&m, &labels, &OversamplePolicy::segments(17)).unwrap();
    check_provenance(&m, &labels, &r);
    assert_eq!(counts(&r.labels), [(0, 30), (1, 30), (2, 30), (3, 30)].into());
    let r = smote(&m, &labels, &OversamplePolicy::documents(17)).unwrap();
    check_provenance(&m, &labels, &r);
    assert_eq!(counts(&r.labels), [(0, 55), (1, 55), (2, 55), (3, 55)].into());
}

#[test]
fn neighbor_counts_are_clamped_to_class_size() {
    let labels = labels_for(&[2, 3, 4, 6, 20]);
    let m = random_l1_rows(labels.len(), 6, 8);
    let r = smote(&m, &labels, &OversamplePolicy::segments(1)).unwrap();
    assert_eq!(r.k_used, [(0, 1), (1, 2), (2, 3), (3, 5)].into());
    let r = smote(&m, &labels, &OversamplePolicy::documents(1)).unwrap();
    assert_eq!(r.k_used, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 4)].into());
    check_provenance(&m, &labels, &r);
}

#[test]
fn capped_policy_leaves_large_classes_alone() {
    let labels = labels_for(&[8, 60]);
    let m = random_l1_rows(labels.len(), 7, 2);
    let r = smote(&m, &labels, &OversamplePolicy::documents(4)).unwrap();
    assert_eq!(counts(&r.labels), [(0, 55), (1, 60)].into());
    assert_eq!(r.provenance.len(), 47);
    assert!(r.provenance.iter().all(|p| p.base < 8));
}

#[test]
fn study_shares_match_for_both_policies() {
    let labels = labels_for(&STUDY_SEGMENTS);
    let m = random_l1_rows(labels.len(), 24, 5);
    let r = smote(&m, &labels, &OversamplePolicy::segments(9)).unwrap();
    assert_eq!(r.matrix.n_rows(), 31 * 600);
    assert_eq!(r.provenance.len(), 7214);
    assert_eq!(format!("{:.1}", 100.0 * r.synthetic_share()), "38.8");

    let labels = labels_for(&STUDY_DOCUMENTS);
    let m = random_l1_rows(labels.len(), 24, 6);
    let r = smote(&m, &labels, &OversamplePolicy::documents(9)).unwrap();
    assert_eq!(r.provenance.len(), 741);
    assert_eq!(r.matrix.n_rows(), 1910);
    assert_eq!(format!("{:.1}", 100.0 * r.synthetic_share()), "38.8");
    check_provenance(&m, &labels, &r);
}

#[test]
fn same_seed_same_output() {
    let labels = labels_for(&[4, 9, 15]);
    let m = random_l1_rows(labels.len(), 8, 1);
    let a = smote(&m, &labels, &OversamplePolicy::segments(5)).unwrap();
    let b = smote(&m, &labels, &OversamplePolicy::segments(5)).unwrap();
    assert_eq!(a, b);
    let c = smote(&m, &labels, &OversamplePolicy::segments(6)).unwrap();
    assert_ne!(a.provenance, c.provenance);
}

#[test]
fn invalid_inputs_are_rejected() {
    let m = random_l1_rows(4, 3, 1);
    let bad_k = OversamplePolicy {
        k_neighbors: 0,
        ..OversamplePolicy::segments(1)
    };
    assert!(smote(&m, &[0, 0, 1, 1], &bad_k).is_err());
    let bad_cap = OversamplePolicy {
        mode: OversampleMode::Capped { cap: 0 },
        ..OversamplePolicy::documents(1)
    };
    assert!(smote(&m, &[0, 0, 1, 1], &bad_cap).is_err());
    assert!(matches!(
        smote(&m, &[0, 1], &OversamplePolicy::segments(1)),
        Err(Error::DimensionMismatch { .. })
    ));
}

proptest! {
    #[test]
    fn targets_follow_the_policy(sizes in prop::collection::vec(1usize..200, 1..20), cap in 1usize..150) {
        let c: BTreeMap<usize, usize> = sizes.iter().copied().enumerate().collect();
        let max = *sizes.iter().max().unwrap();
        for (k, t) in class_targets(&c, OversampleMode::ToMajority) {
            prop_assert_eq!(t, max);
            prop_assert!(t >= c[&k]);
        }
        for (k, t) in class_targets(&c, OversampleMode::Capped { cap }) {
            prop_assert_eq!(t, if c[&k] < cap { cap } else { c[&k] });
        }
    }

    #[test]
    fn synthetic_rows_stay_on_the_simplex(sizes in prop::collection::vec(2usize..12, 2..5), seed in 0u64..1000) {
        let labels = labels_for(&sizes);
        let m = random_l1_rows(labels.len(), 6, seed);
        let r = smote(&m, &labels, &OversamplePolicy::segments(seed)).unwrap();
        for i in m.n_rows()..r.matrix.n_rows() {
            let (_, v) = r.matrix.row(i);
            prop_assert!(v.iter().all(|&x| x >= 0.0));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
