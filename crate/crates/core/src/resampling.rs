// SPDX-License-Identifier: MIT OR Apache-2.0

//! SMOTE oversampling on L1-normalized count rows.
//!
//! A synthetic row is `x + u·(n − x)` where `x` is drawn uniformly from its
//! class, `n` uniformly from the `k` nearest same-class rows of `x`
//! (Euclidean, ties to the lower row index) and `u ~ U[0, 1)`. Every
//! synthetic row records its `(x, n, u)` provenance.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum OversampleMode {
    /// Every class is raised to the size of the largest class.
    ToMajority,
    /// Classes below `cap` are raised to `cap`; larger classes are unaltered.
    Capped { cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OversamplePolicy {
    pub mode: OversampleMode,
    pub k_neighbors: usize,
    pub seed: u64,
}

impl OversamplePolicy {
    /// Segment analysis default: raise every class to the majority, k = 5.
    pub fn segments(seed: u64) -> Self {
        OversamplePolicy {
            mode: OversampleMode::ToMajority,
            k_neighbors: 5,
            seed,
        }
    }

    /// Document analysis default: cap at 55 rows per class, k = 4.
    pub fn documents(seed: u64) -> Self {
        OversamplePolicy {
            mode: OversampleMode::Capped { cap: 55 },
            k_neighbors: 4,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors < 1 {
            return Err(Error::invalid("k_neighbors must be at least 1"));
        }
        if let OversampleMode::Capped { cap } = self.mode {
            if cap < 1 {
                return Err(Error::invalid("oversampling cap must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Target row count per class under `mode`, given the current counts.
pub fn class_targets(counts: &BTreeMap<usize, usize>, mode: OversampleMode) -> BTreeMap<usize, usize> {
    let majority = counts.values().copied().max().unwrap_or(0);
    counts
        .iter()
        .map(|(&c, &n)| {
            let t = match mode {
                OversampleMode::ToMajority => majority,
                OversampleMode::Capped { cap } => n.max(cap),
            };
            (c, t)
        })
        .collect()
}

/// Origin of one synthetic row: `base + u·(neighbor − base)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OversampleResult {
    pub matrix: CsrMatrix,
    pub labels: Vec<usize>,
    /// `true` for generated rows; originals come first and are unchanged.
    pub synthetic: Vec<bool>,
    /// One entry per synthetic row, in row order.
    pub provenance: Vec<Provenance>,
    /// Effective neighbor count per class after clamping.
    pub k_used: BTreeMap<usize, usize>,
}

impl OversampleResult {
    pub fn synthetic_share(&self) -> f64 {
        synthetic_share(self)
    }
}

pub fn synthetic_share(r: &OversampleResult) -> f64 {
    if r.synthetic.is_empty() {
        return 0.0;
    }
    r.synthetic.iter().filter(|&&s| s).count() as f64 / r.synthetic.len() as f64
}

fn sq_distance(m: &CsrMatrix, a: usize, b: usize) -> f64 {
    let (ia, va) = m.row(a);
    let (ib, vb) = m.row(b);
    let (mut p, mut q, mut s) = (0, 0, 0.0);
    while p < ia.len() || q < ib.len() {
        let d = if q >= ib.len() || (p < ia.len() && ia[p] < ib[q]) {
            p += 1;
            va[p - 1]
        } else if p >= ia.len() || ib[q] < ia[p] {
            q += 1;
            -vb[q - 1]
        } else {
            p += 1;
            q += 1;
            va[p - 1] - vb[q - 1]
        };
        s += d * d;
    }
    s
}

/// `k` nearest rows to `x` among `members` (excluding `x`), nearest first.
fn nearest(m: &CsrMatrix, x: usize, members: &[usize], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = members
        .iter()
        .filter(|&&j| j != x)
        .map(|&j| (sq_distance(m, x, j), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

fn interpolate(m: &CsrMatrix, base: usize, neighbor: usize, u: f64) -> Vec<(usize, f64)> {
    let mut out: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    let (ib, vb) = m.row(base);
    for (&j, &v) in ib.iter().zip(vb) {
        out.entry(j).or_default().0 = v;
    }
    let (inb, vnb) = m.row(neighbor);
    for (&j, &v) in inb.iter().zip(vnb) {
        out.entry(j).or_default().1 = v;
    }
    out.into_iter().map(|(j, (x, n))| (j, x + u * (n - x))).collect()
}

pub fn smote(m: &CsrMatrix, labels: &[usize], policy: &OversamplePolicy) -> Result<OversampleResult> {
    policy.validate()?;
    if labels.len() != m.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: m.n_rows(),
            actual: labels.len(),
        });
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        members.entry(c).or_default().push(i);
    }
    let counts: BTreeMap<usize, usize> = members.iter().map(|(&c, v)| (c, v.len())).collect();
    let targets = class_targets(&counts, policy.mode);

    let mut matrix = m.clone();
    let mut out_labels = labels.to_vec();
    let mut synthetic = vec![false; labels.len()];
    let mut provenance = Vec::new();
    let mut k_used = BTreeMap::new();

    for (&class, rows) in &members {
        let need = targets[&class] - rows.len();
        if need == 0 {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::Infeasible(format!(
                "class {class} has a single member and needs {need} synthetic rows"
            )));
        }
        let k = policy.k_neighbors.min(rows.len() - 1);
        k_used.insert(class, k);
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed ^ (class as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let mut neighbor_cache: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for _ in 0..need {
            let base = rows[rng.random_range(0..rows.len())];
            let nn = neighbor_cache.entry(base).or_insert_with(|| nearest(m, base, rows, k));
            let neighbor = nn[rng.random_range(0..nn.len())];
            let u: f64 = rng.random();
            matrix.push_row(interpolate(m, base, neighbor, u))?;
            out_labels.push(class);
            synthetic.push(true);
            provenance.push(Provenance { base, neighbor, u });
        }
    }
    Ok(OversampleResult {
        matrix,
        labels: out_labels,
        synthetic,
        provenance,
        k_used,
    })
}
