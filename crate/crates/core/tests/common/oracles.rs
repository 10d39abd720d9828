//! Reference implementations shared by the integration tests. None of them
//! call into the library code they check.

use std::collections::BTreeMap;

use docroute::aggregation::{AggregationMethod, SegmentGroup};
use docroute::classifiers::Activation;
use docroute::evaluation::FoldAssignment;
use docroute::linalg::{CsrMatrix, DenseMatrix, Features};
use docroute::resampling::OversampleResult;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const DOCS: [&str; 5] = [
    "apfel birne apfel",
    "birne kirsche",
    "apfel dattel",
    "dattel apfel apfel",
    "apfel birne dattel elch",
];

/// tf-idf of `DOCS` worked out by hand: counts, divided by row length,
/// times ln(5 / df) with df = apfel 4, birne 3, dattel 3, elch 1, kirsche 1.
pub fn hand_tfidf() -> [[f64; 5]; 5] {
    let (a, b, d, e, k) = (
        (5.0f64 / 4.0).ln(),
        (5.0f64 / 3.0).ln(),
        (5.0f64 / 3.0).ln(),
        5.0f64.ln(),
        5.0f64.ln(),
    );
    [
        [2.0 / 3.0 * a, 1.0 / 3.0 * b, 0.0, 0.0, 0.0],
        [0.0, 0.5 * b, 0.0, 0.0, 0.5 * k],
        [0.5 * a, 0.0, 0.5 * d, 0.0, 0.0],
        [2.0 / 3.0 * a, 0.0, 1.0 / 3.0 * d, 0.0, 0.0],
        [0.25 * a, 0.25 * b, 0.25 * d, 0.25 * e, 0.0],
    ]
}

pub fn labels_for(counts: &[usize]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(c, &n)| vec![c; n]).collect()
}

pub fn dense(m: &CsrMatrix, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m.n_cols()];
    for (j, x) in m.row_entries(i) {
        v[j] = x;
    }
    v
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Checks every synthetic row against its recorded origin, and that the
/// neighbor is among the `k` nearest same-class rows by a dense scan.
pub fn check_provenance(m: &CsrMatrix, labels: &[usize], r: &OversampleResult) {
    let n = m.n_rows();
    assert_eq!(r.provenance.len(), r.matrix.n_rows() - n);
    assert!(r.synthetic[..n].iter().all(|&s| !s));
    assert_eq!(r.labels[..n], labels[..]);
    for i in 0..n {
        assert_eq!(r.matrix.row_entries(i), m.row_entries(i));
    }
    for (s, p) in r.provenance.iter().enumerate() {
        let row = n + s;
        assert!(r.synthetic[row]);
        let c = r.labels[row];
        assert_eq!(labels[p.base], c);
        assert_eq!(labels[p.neighbor], c);
        assert_ne!(p.base, p.neighbor);
        assert!((0.0..1.0).contains(&p.u));
        let x = dense(m, p.base);
        let nb = dense(m, p.neighbor);
        let got = dense(&r.matrix, row);
        for j in 0..x.len() {
            let want = x[j] + p.u * (nb[j] - x[j]);
            assert!((got[j] - want).abs() <= 1e-12, "row {row} col {j}");
        }
        let k = r.k_used[&c];
        let mut d: Vec<f64> = (0..n)
            .filter(|&j| j != p.base && labels[j] == c)
            .map(|j| dist2(&x, &dense(m, j)))
            .collect();
        d.sort_by(f64::total_cmp);
        assert!(dist2(&x, &nb) <= d[k - 1] + 1e-15);
    }
}

pub fn counts(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &c in labels {
        *m.entry(c).or_insert(0) += 1;
    }
    m
}

pub const ACTIVATIONS: [Activation; 4] = [Activation::Logistic, Activation::Tanh, Activation::Relu, Activation::Sigmoid];

/// Gaussian blobs: one center per class, drawn on a sphere of radius `spread`.
pub fn blobs(n_per: usize, classes: usize, dim: usize, spread: f64, seed: u64) -> (Features, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n * spread).collect()
        })
        .collect();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..n_per {
            rows.push(center.iter().map(|m| m + noise.sample(&mut rng)).collect());
            y.push(c);
        }
    }
    (Features::Dense(DenseMatrix::from_rows(&rows).unwrap()), y)
}

pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

/// Moves parameters off zero so no ReLU unit sits exactly on its kink.
pub fn jittered(params: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    params.iter().map(|p| p + rng.random_range(-0.1..0.1)).collect()
}

pub fn numeric_gradient(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-6;
    let mut p = params.to_vec();
    (0..params.len())
        .map(|j| {
            p[j] = params[j] + h;
            let up = f(&p);
            p[j] = params[j] - h;
            let down = f(&p);
            p[j] = params[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub const GRID: i64 = 8;

/// Group whose probabilities are multiples of 1/8 and weights small
/// integers, so every score is exact and ties are frequent.
pub fn grid_group(rng: &mut ChaCha8Rng) -> (SegmentGroup, Vec<Vec<i64>>, Vec<i64>) {
    let classes = rng.random_range(2..6);
    let segs = rng.random_range(1..7);
    let mut units = Vec::new();
    for _ in 0..segs {
        let mut row = vec![0i64; classes];
        for _ in 0..GRID {
            row[rng.random_range(0..classes)] += 1;
        }
        units.push(row);
    }
    let weights: Vec<i64> = (0..segs).map(|_| rng.random_range(1..5)).collect();
    let g = SegmentGroup {
        doc_id: "d".into(),
        probs: units
            .iter()
            .map(|r| r.iter().map(|&u| u as f64 / GRID as f64).collect())
            .collect(),
        weights: weights.iter().map(|&w| w as f64).collect(),
    };
    (g, units, weights)
}

/// First class whose score no other class beats.
pub fn first_max(scores: &[i64], allowed: &[bool]) -> usize {
    let best = (0..scores.len()).filter(|&c| allowed[c]).map(|c| scores[c]).max().unwrap();
    (0..scores.len()).find(|&c| allowed[c] && scores[c] == best).unwrap()
}

pub fn brute_force(units: &[Vec<i64>], weights: &[i64], method: AggregationMethod) -> usize {
    let k = units[0].len();
    let col = |w: &dyn Fn(usize) -> i64| -> Vec<i64> {
        (0..k).map(|c| units.iter().enumerate().map(|(s, r)| w(s) * r[c]).sum()).collect()
    };
    match method {
        AggregationMethod::MaxSum => first_max(&col(&|_| 1), &vec![true; k]),
        AggregationMethod::MaxWeightedAverage => first_max(&col(&|s| weights[s]), &vec![true; k]),
        AggregationMethod::RestrictedMaxSum => {
            let mut allowed = vec![false; k];
            for r in units {
                allowed[first_max(r, &vec![true; k])] = true;
            }
            first_max(&col(&|_| 1), &allowed)
        }
    }
}

pub fn random_group(rng: &mut ChaCha8Rng, equal_weight: Option<f64>) -> SegmentGroup {
    let classes = rng.random_range(2..10);
    let segs = rng.random_range(1..12);
    let probs = (0..segs)
        .map(|_| {
            let r: Vec<f64> = (0..classes).map(|_| rng.random::<f64>().powi(3)).collect();
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    let weights = (0..segs)
        .map(|_| equal_weight.unwrap_or_else(|| rng.random_range(1.0..3000.0)))
        .collect();
    SegmentGroup {
        doc_id: "d".into(),
        probs,
        weights,
    }
}

pub fn docs(sizes: &[usize]) -> BTreeMap<String, usize> {
    sizes.iter().enumerate().map(|(i, &s)| (format!("doc{i:03}"), s)).collect()
}

pub fn spread(loads: &[usize]) -> usize {
    loads.iter().max().unwrap() - loads.iter().min().unwrap()
}

/// Smallest spread over every assignment that leaves no fold empty.
pub fn exhaustive_min_spread(sizes: &[usize], k: usize) -> usize {
    let n = sizes.len();
    let mut best = usize::MAX;
    let mut code = vec![0usize; n];
    loop {
        let mut loads = vec![0; k];
        let mut used = vec![false; k];
        for (d, &f) in code.iter().enumerate() {
            loads[f] += sizes[d];
            used[f] = true;
        }
        if used.iter().all(|&u| u) {
            best = best.min(spread(&loads));
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            code[i] += 1;
            if code[i] < k {
                break;
            }
            code[i] = 0;
            i += 1;
        }
    }
}

pub fn check_integrity(a: &FoldAssignment, d: &BTreeMap<String, usize>) {
    assert_eq!(a.folds.len(), d.len());
    let mut totals = vec![0; a.n_folds];
    let mut members = vec![0; a.n_folds];
    for (doc, &n) in d {
        let f = a.fold_of(doc).unwrap();
        assert!(f < a.n_folds);
        totals[f] += n;
        members[f] += 1;
    }
    assert_eq!(totals, a.segment_totals);
    assert!(members.iter().all(|&m| m > 0));
    assert_eq!(a.spread(), spread(&totals));
}

/// Support-weighted metrics computed from a confusion matrix.
pub fn metrics_oracle(y: &[usize], p: &[usize], k: usize) -> (f64, f64, f64, f64) {
    let mut cm = vec![vec![0usize; k]; k];
    for (&t, &q) in y.iter().zip(p) {
        cm[t][q] += 1;
    }
    let n = y.len() as f64;
    let (mut wp, mut wr, mut wf, mut correct) = (0.0, 0.0, 0.0, 0);
    for (c, row) in cm.iter().enumerate() {
        let tp = row[c] as f64;
        let support: usize = row.iter().sum();
        let predicted: usize = cm.iter().map(|r| r[c]).sum();
        let prec = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let rec = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
        let w = support as f64 / n;
        wp += w * prec;
        wr += w * rec;
        wf += w * f1;
        correct += row[c];
    }
    (correct as f64 / n, wp, wr, wf)
}

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("c{c}")).collect()
}
