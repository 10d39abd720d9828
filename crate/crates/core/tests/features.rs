mod common;

use common::oracles::{hand_tfidf, DOCS};
use docroute::features::{
    apply_idf, count_vectorize, fit_idf, fit_truncated_svd, fit_vocabulary, l1_normalize, l2_normalize,
    svd_transform,
};
use docroute::linalg::{CsrMatrix, DenseMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn tfidf_hand_fixture() {
    let vocab = fit_vocabulary(&DOCS).unwrap();
    assert_eq!(vocab.terms(), ["apfel", "birne", "dattel", "elch", "kirsche"]);
    let l1 = l1_normalize(&count_vectorize(&DOCS, &vocab));
    let idf = fit_idf(&l1).unwrap();
    assert_eq!(idf.document_frequency, [4, 3, 3, 1, 1]);
    let m = apply_idf(&l1, &idf).unwrap();
    let want = hand_tfidf();
    for (i, row) in want.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert!((m.get(i, j) - v).abs() <= 1e-12, "({i},{j})");
        }
    }
}

#[test]
fn vocabulary_and_counting_examples() {
    assert_eq!(fit_vocabulary(&["b a", "a c"]).unwrap().terms(), ["a", "b", "c"]);
    assert_eq!(fit_vocabulary(&["x x x"]).unwrap().terms(), ["x"]);
    assert!(fit_vocabulary(&["", " "]).is_err());
    let vocab = fit_vocabulary(&["a b c"]).unwrap();
    let m = count_vectorize(&["a a b", ""], &vocab);
    assert_eq!(m.to_dense().row(0), [2.0, 1.0, 0.0]);
    assert_eq!(m.row(1).0.len(), 0);
}

#[test]
fn idf_instances() {
    let m = CsrMatrix::from_row_entries(2, vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0)], vec![(0, 2.0)], vec![(0, 1.0), (1, 3.0)]])
        .unwrap();
    let idf = fit_idf(&m).unwrap();
    assert!((idf.idf[1] - 2f64.ln()).abs() < 1e-15);
    assert_eq!(idf.idf[0], 0.0);
    let scaled = apply_idf(&m, &idf).unwrap();
    // a zero idf drops the column
    assert!(scaled.row(1).0.is_empty());
    assert!(apply_idf(&CsrMatrix::empty(3), &idf).is_err());
}

fn random_csr(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> CsrMatrix {
    let entries = (0..rows)
        .map(|_| {
            let mut e = Vec::new();
            for j in 0..cols {
                if rng.random_bool(density) {
                    e.push((j, rng.random_range(-1.0..1.0)));
                }
            }
            e
        })
        .collect();
    CsrMatrix::from_row_entries(cols, entries).unwrap()
}

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn assert_orthonormal_rows(c: &DenseMatrix, tol: f64) {
    let na = to_na(c);
    let gram = &na * na.transpose();
    let err = (gram - DMatrix::identity(c.rows(), c.rows())).abs().max();
    assert!(err <= tol, "orthonormality error {err}");
}

#[test]
fn singular_values_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..20 {
        let m = random_csr(&mut rng, 50, 80, 0.3);
        let oracle = to_na(&m.to_dense()).singular_values();
        let model = fit_truncated_svd(&m, 50, trial).unwrap();
        assert_eq!(model.k, 50);
        for (s, o) in model.singular_values.iter().zip(oracle.iter()) {
            assert!((s - o).abs() <= 1e-6 * o, "trial {trial}: {s} vs {o}");
        }
        assert!(model.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert_orthonormal_rows(&model.components, 1e-8);
    }
}

#[test]
fn leading_values_of_decaying_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..5 {
        // A = U diag(2^-i) Vᵀ with random orthonormal U, V
        let u = DMatrix::from_fn(60, 30, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let v = DMatrix::from_fn(90, 30, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(30, |i, _| 0.5f64.powi(i as i32)));
        let a = &u * s * v.transpose();
        let rows = (0..60).map(|i| (0..90).map(|j| (j, a[(i, j)])).collect()).collect();
        let m = CsrMatrix::from_row_entries(90, rows).unwrap();
        let oracle = a.singular_values();
        let model = fit_truncated_svd(&m, 10, trial).unwrap();
        for (x, o) in model.singular_values.iter().zip(oracle.iter()) {
            assert!((x - o).abs() <= 1e-6 * o, "{x} vs {o}");
        }
    }
}

#[test]
fn rank_two_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = DMatrix::from_fn(30, 2, |_, _| rng.random_range(-1.0..1.0));
    let b = DMatrix::from_fn(2, 40, |_, _| rng.random_range(-1.0..1.0));
    let full = &a * &b;
    let rows = (0..30).map(|i| (0..40).map(|j| (j, full[(i, j)])).collect()).collect();
    let m = CsrMatrix::from_row_entries(40, rows).unwrap();
    let model = fit_truncated_svd(&m, 2, 3).unwrap();
    let proj = to_na(&svd_transform(&m, &model).unwrap());
    let back = proj * to_na(&model.components);
    assert!((back - full).norm() <= 1e-8);
}

#[test]
fn projection_is_reproducible_and_clamped() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = random_csr(&mut rng, 12, 30, 0.2);
    let a = fit_truncated_svd(&m, 800, 5).unwrap();
    let b = fit_truncated_svd(&m, 800, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.k, 12);
    assert_eq!(svd_transform(&m, &a).unwrap(), svd_transform(&m, &b).unwrap());
}

fn row_strategy() -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::btree_map(0usize..20, 0.01f64..100.0, 0..10).prop_map(|m| m.into_iter().collect())
}

proptest! {
    #[test]
    fn l1_is_scale_invariant(row in row_strategy(), c in 0.001f64..1000.0) {
        let m = CsrMatrix::from_row_entries(20, vec![row.clone()]).unwrap();
        let scaled = CsrMatrix::from_row_entries(20, vec![row.iter().map(|&(j, v)| (j, c * v)).collect()]).unwrap();
        let (a, b) = (l1_normalize(&m), l1_normalize(&scaled));
        for j in 0..20 {
            prop_assert!((a.get(0, j) - b.get(0, j)).abs() <= 1e-12);
        }
        if !row.is_empty() {
            prop_assert!((a.row(0).1.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn l2_rows_are_unit(rows in prop::collection::vec(row_strategy(), 1..8)) {
        let m = l2_normalize(&CsrMatrix::from_row_entries(20, rows.clone()).unwrap());
        for (i, r) in rows.iter().enumerate() {
            let n: f64 = m.row(i).1.iter().map(|v| v * v).sum();
            if r.is_empty() { prop_assert_eq!(n, 0.0) } else { prop_assert!((n.sqrt() - 1.0).abs() <= 1e-12) }
        }
    }

    #[test]
    fn counts_sum_to_in_vocabulary_terms(words in prop::collection::vec("[a-e]{1,2}", 0..30)) {
        let vocab = fit_vocabulary(&["a b c d e aa bb"]).unwrap();
        let text = words.join(" ");
        let m = count_vectorize(&[text.as_str()], &vocab);
        let known = words.iter().filter(|w| vocab.index_of(w).is_some()).count();
        prop_assert_eq!(m.row(0).1.iter().sum::<f64>(), known as f64);
    }

    #[test]
    fn idf_inverts_document_frequency(rows in prop::collection::vec(row_strategy(), 1..12)) {
        let m = CsrMatrix::from_row_entries(20, rows).unwrap();
        let idf = fit_idf(&m).unwrap();
        for (t, &df) in idf.document_frequency.iter().enumerate() {
            if df > 0 {
                prop_assert!((idf.idf[t].exp() * df as f64 - m.n_rows() as f64).abs() <= 1e-9);
                prop_assert!(idf.idf[t] >= 0.0);
            }
        }
    }
}
