mod common;

use common::oracles::{check_integrity, docs, exhaustive_min_spread, metrics_oracle, names, spread};

use docroute::evaluation::{build_folds, compute_metrics, read_folds};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn spread_is_at_most_one_whenever_achievable() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut achievable = 0;
    for t in 0..300 {
        let n = rng.random_range(3..9);
        let k = rng.random_range(2..=3.min(n));
        let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..15)).collect();
        let d = docs(&sizes);
        let a = build_folds(&d, k, t).unwrap();
        check_integrity(&a, &d);
        let best = exhaustive_min_spread(&sizes, k);
        assert!(a.spread() >= best);
        if best <= 1 {
            achievable += 1;
            assert!(a.spread() <= 1, "{sizes:?} into {k}: got {} best {best}", a.spread());
        }
    }
    assert!(achievable > 50);
}

#[test]
fn perfectly_divisible_fixture_has_zero_spread() {
    let d = docs(&[4, 3, 3, 2, 2, 1, 1]);
    for k in [2, 4] {
        let a = build_folds(&d, k, 7).unwrap();
        check_integrity(&a, &d);
        assert_eq!(a.spread(), 0, "{k} folds");
    }
}

#[test]
fn no_single_move_or_swap_lowers_the_spread() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 0..20 {
        let sizes: Vec<usize> = (0..rng.random_range(20..120)).map(|_| rng.random_range(1..60)).collect();
        let d = docs(&sizes);
        let a = build_folds(&d, 5, t).unwrap();
        check_integrity(&a, &d);
        let place: Vec<(usize, usize)> = d.iter().map(|(doc, &n)| (a.fold_of(doc).unwrap(), n)).collect();
        let base = a.spread();
        let mut members = [0; 5];
        place.iter().for_each(|p| members[p.0] += 1);
        for &(f, n) in &place {
            for to in 0..5 {
                if to != f && members[f] > 1 {
                    let mut l = a.segment_totals.clone();
                    l[f] -= n;
                    l[to] += n;
                    assert!(spread(&l) >= base);
                }
            }
        }
        for i in 0..place.len() {
            for j in i + 1..place.len() {
                let ((fi, ni), (fj, nj)) = (place[i], place[j]);
                if fi != fj {
                    let mut l = a.segment_totals.clone();
                    l[fi] = l[fi] - ni + nj;
                    l[fj] = l[fj] - nj + ni;
                    assert!(spread(&l) >= base);
                }
            }
        }
    }
}

#[test]
fn folds_are_seeded_and_round_trip() {
    let d = docs(&[5, 5, 5, 5, 3, 3, 2, 2, 1, 9]);
    let a = build_folds(&d, 3, 4).unwrap();
    assert_eq!(a, build_folds(&d, 3, 4).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("folds.csv");
    a.write(&path).unwrap();
    assert_eq!(read_folds(&path, &d).unwrap(), a);
    let mut other = d.clone();
    other.insert("stray".into(), 1);
    assert!(read_folds(&path, &other).is_err());
}

#[test]
fn infeasible_fold_requests_fail() {
    let d = docs(&[1, 2]);
    assert!(build_folds(&d, 3, 0).is_err());
    assert!(build_folds(&d, 0, 0).is_err());
    assert!(build_folds(&docs(&[1, 0]), 2, 0).is_err());
}

#[test]
fn hand_fixture_metrics() {
    let y = [0, 0, 0, 1, 1, 2];
    let p = [0, 0, 1, 1, 2, 2];
    let m = compute_metrics(&y, &p, &names(3)).unwrap();
    assert!((m.accuracy - 4.0 / 6.0).abs() < 1e-12);
    assert!((m.precision - 0.75).abs() < 1e-12);
    assert!((m.recall - 4.0 / 6.0).abs() < 1e-12);
    assert!((m.f1 - (2.4 + 1.0 + 2.0 / 3.0) / 6.0).abs() < 1e-12);
    let c0 = &m.per_class[0];
    assert_eq!((c0.label.as_str(), c0.support), ("c0", 3));
    assert!((c0.f1 - 0.8).abs() < 1e-12);
    assert!(m.warnings.is_empty());
}

#[test]
fn weighted_recall_equals_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let k = rng.random_range(2..12);
        let n = rng.random_range(1..300);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let p: Vec<usize> = y
            .iter()
            .map(|&t| if rng.random_bool(0.6) { t } else { rng.random_range(0..k) })
            .collect();
        let m = compute_metrics(&y, &p, &names(k)).unwrap();
        assert!((m.recall - m.accuracy).abs() <= 1e-12);
        let (acc, wp, wr, wf) = metrics_oracle(&y, &p, k);
        assert!((m.accuracy - acc).abs() <= 1e-12);
        assert!((m.precision - wp).abs() <= 1e-12);
        assert!((m.recall - wr).abs() <= 1e-12);
        assert!((m.f1 - wf).abs() <= 1e-12);
    }
}

#[test]
fn zero_denominators_warn() {
    let m = compute_metrics(&[0, 0, 1], &[0, 0, 0], &names(3)).unwrap();
    assert_eq!(m.per_class[1].precision, 0.0);
    assert_eq!(m.per_class[2].recall, 0.0);
    assert!(!m.warnings.is_empty());
    assert!(compute_metrics(&[], &[], &names(2)).is_err());
    assert!(compute_metrics(&[0], &[0, 1], &names(2)).is_err());
}

proptest! {
    #[test]
    fn every_document_lands_in_exactly_one_fold(sizes in prop::collection::vec(1usize..50, 5..60), k in 2usize..6, seed in 0u64..100) {
        let d = docs(&sizes);
        let a = build_folds(&d, k, seed).unwrap();
        check_integrity(&a, &d);
        prop_assert!(a.spread() <= *sizes.iter().max().unwrap());
    }
}
