#![allow(dead_code)]

pub mod oracles;

use docroute::linalg::CsrMatrix;
use docroute::segmentation::{Segment, SegmentedCorpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Segments per class after filtering: 31 classes, minimum 107, total
/// 11,386, mean 367.3, corrected sd 187.5.
pub const STUDY_SEGMENTS: [usize; 31] = [
    107, 108, 108, 108, 108, 116, 129, 135, 178, 192, 220, 325, 340, 341, 343, 449, 506, 517, 538, 538, 538, 538, 538,
    538, 538, 538, 538, 538, 538, 538, 600,
];

/// Documents per class, paired index-wise with `STUDY_SEGMENTS`: minimum 8,
/// total 1,169, mean 37.7, corrected sd 31.0.
pub const STUDY_DOCUMENTS: [usize; 31] = [
    8, 9, 9, 9, 9, 9, 9, 10, 10, 10, 11, 12, 14, 16, 26, 31, 36, 38, 43, 46, 52, 52, 58, 61, 62, 65, 71, 83, 84, 100,
    116,
];

/// Classes below the 100-segment threshold: (segments, documents).
pub const SMALL_CLASSES: [(usize, usize); 3] = [(99, 9), (40, 6), (3, 2)];

pub fn class_name(i: usize) -> String {
    format!("dept-{i:02}")
}

/// Segment corpus shaped like the study: the 31 classes above plus
/// `SMALL_CLASSES`, segments spread round-robin over each class's documents.
pub fn study_segments() -> SegmentedCorpus {
    let mut shapes: Vec<(usize, usize)> = STUDY_SEGMENTS.iter().copied().zip(STUDY_DOCUMENTS).collect();
    shapes.extend(SMALL_CLASSES);
    let mut segments = Vec::new();
    for (c, &(n_seg, n_doc)) in shapes.iter().enumerate() {
        for d in 0..n_doc {
            let n = n_seg / n_doc + usize::from(d < n_seg % n_doc);
            for index in 0..n {
                segments.push(Segment {
                    doc_id: format!("c{c:02}-d{d:03}"),
                    index,
                    department: class_name(c),
                    text: format!("term{c} word{d} part{index}"),
                });
            }
        }
    }
    SegmentedCorpus::new(segments, 2048).unwrap()
}

/// Random L1-normalized sparse rows.
pub fn random_l1_rows(n: usize, d: usize, seed: u64) -> CsrMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let mut e = Vec::new();
            for j in 0..d {
                if rng.random_bool(0.4) {
                    e.push((j, rng.random_range(1..6) as f64));
                }
            }
            if e.is_empty() {
                e.push((rng.random_range(0..d), 1.0));
            }
            let s: f64 = e.iter().map(|x| x.1).sum();
            e.iter_mut().for_each(|x| x.1 /= s);
            e
        })
        .collect();
    CsrMatrix::from_row_entries(d, rows).unwrap()
}

pub fn mean_sd(v: &[usize]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<usize>() as f64 / n;
    let var = v.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
