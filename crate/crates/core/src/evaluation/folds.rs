// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::write_jsonl;
use crate::error::{Error, Result};

/// Document → fold map. All segments of a document share its fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub n_folds: usize,
    pub folds: BTreeMap<String, usize>,
    pub segment_totals: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FoldLine {
    doc_id: String,
    fold: usize,
}

impl FoldAssignment {
    pub fn fold_of(&self, doc_id: &str) -> Option<usize> {
        self.folds.get(doc_id).copied()
    }

    /// Max minus min segment total across folds.
    pub fn spread(&self) -> usize {
        spread(&self.segment_totals)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let lines: Vec<FoldLine> = self
            .folds
            .iter()
            .map(|(d, &f)| FoldLine {
                doc_id: d.clone(),
                fold: f,
            })
            .collect();
        write_jsonl(path, &lines)
    }
}

/// Reads a fold file and recomputes per-fold totals from `doc_segments`.
pub fn read_folds(path: &Path, doc_segments: &BTreeMap<String, usize>) -> Result<FoldAssignment> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut folds = BTreeMap::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let l: FoldLine = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        folds.insert(l.doc_id, l.fold);
    }
    let n_folds = folds.values().max().map_or(0, |m| m + 1);
    let mut totals = vec![0; n_folds];
    for (d, &c) in doc_segments {
        let f = *folds
            .get(d)
            .ok_or_else(|| Error::CorpusMismatch(format!("document {d:?} has no fold")))?;
        totals[f] += c;
    }
    Ok(FoldAssignment {
        n_folds,
        folds,
        segment_totals: totals,
    })
}

fn spread(loads: &[usize]) -> usize {
    loads.iter().max().unwrap_or(&0) - loads.iter().min().unwrap_or(&0)
}

fn sum_sq(loads: &[usize]) -> usize {
    loads.iter().map(|l| l * l).sum()
}

/// Applies the best improving move or swap until none lowers
/// `(spread, Σ load²)`.
fn repair(sizes: &[usize], fold_of: &mut [usize], loads: &mut [usize], members: &mut [usize]) {
    let n_folds = loads.len();
    loop {
        let current = (spread(loads), sum_sq(loads));
        let mut best: Option<((usize, usize), Change)> = None;
        let mut consider = |score: (usize, usize), change: Change| {
            if score < current && best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((score, change));
            }
        };
        for (i, &c) in sizes.iter().enumerate() {
            let from = fold_of[i];
            if members[from] == 1 {
                continue;
            }
            for to in 0..n_folds {
                if to == from {
                    continue;
                }
                let mut l = loads.to_vec();
                l[from] -= c;
                l[to] += c;
                consider((spread(&l), sum_sq(&l)), Change::Move { doc: i, to });
            }
        }
        for i in 0..sizes.len() {
            for j in (i + 1)..sizes.len() {
                let (fi, fj) = (fold_of[i], fold_of[j]);
                let (ci, cj) = (sizes[i], sizes[j]);
                if fi == fj || ci == cj {
                    continue;
                }
                let mut l = loads.to_vec();
                l[fi] = l[fi] - ci + cj;
                l[fj] = l[fj] - cj + ci;
                consider((spread(&l), sum_sq(&l)), Change::Swap { a: i, b: j });
            }
        }
        match best {
            None => break,
            Some((_, Change::Move { doc, to })) => {
                let from = fold_of[doc];
                loads[from] -= sizes[doc];
                loads[to] += sizes[doc];
                members[from] -= 1;
                members[to] += 1;
                fold_of[doc] = to;
            }
            Some((_, Change::Swap { a, b })) => {
                let (fa, fb) = (fold_of[a], fold_of[b]);
                loads[fa] = loads[fa] - sizes[a] + sizes[b];
                loads[fb] = loads[fb] - sizes[b] + sizes[a];
                fold_of.swap(a, b);
            }
        }
    }
}

/// Greedy longest-processing-time placement followed by move/swap repair.
///
/// Documents are placed largest first (ties in seeded random order) into the
/// currently lightest fold. Repair then applies single-document moves and
/// pairwise swaps while they lower `(spread, Σ load²)` lexicographically, so
/// the result admits no move or swap that reduces the spread. If the spread
/// is still above 0 (1 when the total does not divide evenly), a bounded
/// exact search tries to lower it.
pub fn build_folds(doc_segments: &BTreeMap<String, usize>, n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    if n_folds < 1 {
        return Err(Error::invalid("fold count must be at least 1"));
    }
    if n_folds > doc_segments.len() {
        return Err(Error::Infeasible(format!(
            "{n_folds} folds requested for {} documents",
            doc_segments.len()
        )));
    }
    if let Some((d, _)) = doc_segments.iter().find(|(_, &c)| c == 0) {
        return Err(Error::invalid(format!("document {d:?} has no segments")));
    }
    let mut docs: Vec<(&str, usize)> = doc_segments.iter().map(|(d, &c)| (d.as_str(), c)).collect();
    docs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    docs.sort_by_key(|d| std::cmp::Reverse(d.1));

    let mut loads = vec![0usize; n_folds];
    let mut members = vec![0usize; n_folds];
    let mut fold_of = vec![0usize; docs.len()];
    for (i, &(_, c)) in docs.iter().enumerate() {
        let f = (0..n_folds).min_by_key(|&f| (loads[f], f)).expect("n_folds >= 1");
        loads[f] += c;
        members[f] += 1;
        fold_of[i] = f;
    }

    let sizes: Vec<usize> = docs.iter().map(|d| d.1).collect();
    repair(&sizes, &mut fold_of, &mut loads, &mut members);
    let bound = usize::from(sizes.iter().sum::<usize>() % n_folds != 0);
    if spread(&loads) > bound {
        let mut search = ExactSearch::new(&sizes, n_folds, spread(&loads), bound);
        search.run(0);
        if let Some(best) = search.best_assignment {
            fold_of = best;
            loads = vec![0; n_folds];
            members = vec![0; n_folds];
            for (&f, &c) in fold_of.iter().zip(&sizes) {
                loads[f] += c;
                members[f] += 1;
            }
            repair(&sizes, &mut fold_of, &mut loads, &mut members);
        }
    }

    let folds = docs
        .iter()
        .zip(&fold_of)
        .map(|(&(d, _), &f)| (d.to_string(), f))
        .collect();
    Ok(FoldAssignment {
        n_folds,
        folds,
        segment_totals: loads,
    })
}

/// Node budget of the exact stage; past it the best assignment found so far
/// is kept.
const EXACT_NODE_BUDGET: usize = 500_000;

/// Depth-first branch and bound over fold assignments, looking for a lower
/// spread than the repaired greedy result. Documents arrive largest first.
struct ExactSearch<'a> {
    sizes: &'a [usize],
    /// Segments still to place from document `i` on.
    suffix: Vec<usize>,
    floor_mean: usize,
    loads: Vec<usize>,
    assignment: Vec<usize>,
    best_spread: usize,
    bound: usize,
    best_assignment: Option<Vec<usize>>,
    nodes: usize,
}

impl<'a> ExactSearch<'a> {
    fn new(sizes: &'a [usize], n_folds: usize, incumbent: usize, bound: usize) -> Self {
        let mut suffix = vec![0; sizes.len() + 1];
        for i in (0..sizes.len()).rev() {
            suffix[i] = suffix[i + 1] + sizes[i];
        }
        ExactSearch {
            sizes,
            floor_mean: suffix[0] / n_folds,
            suffix,
            loads: vec![0; n_folds],
            assignment: vec![0; sizes.len()],
            best_spread: incumbent,
            bound,
            best_assignment: None,
            nodes: 0,
        }
    }

    /// Returns true once the search should stop.
    fn run(&mut self, i: usize) -> bool {
        if self.nodes >= EXACT_NODE_BUDGET {
            return true;
        }
        self.nodes += 1;
        if i == self.sizes.len() {
            let s = spread(&self.loads);
            if s < self.best_spread {
                self.best_spread = s;
                self.best_assignment = Some(self.assignment.clone());
            }
            return self.best_spread <= self.bound;
        }
        let rest = self.suffix[i];
        let max = *self.loads.iter().max().expect("n_folds >= 1");
        let lowest_reachable = self.loads.iter().map(|l| l + rest).min().expect("n_folds >= 1");
        if max.saturating_sub(lowest_reachable.min(self.floor_mean)) >= self.best_spread {
            return false;
        }
        let empty = self.loads.iter().filter(|&&l| l == 0).count();
        if empty > self.sizes.len() - i {
            return false;
        }
        let mut order: Vec<usize> = (0..self.loads.len()).collect();
        order.sort_by_key(|&f| (self.loads[f], f));
        order.dedup_by_key(|f| self.loads[*f]);
        for f in order {
            self.assignment[i] = f;
            self.loads[f] += self.sizes[i];
            let stop = self.run(i + 1);
            self.loads[f] -= self.sizes[i];
            if stop {
                return true;
            }
        }
        false
    }
}

enum Change {
    Move { doc: usize, to: usize },
    Swap { a: usize, b: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(v: &[usize]) -> BTreeMap<String, usize> {
        v.iter().enumerate().map(|(i, &c)| (format!("d{i:02}"), c)).collect()
    }

    #[test]
    fn unit_documents_split_evenly() {
        let f = build_folds(&counts(&[1; 10]), 5, 0).unwrap();
        assert_eq!(f.segment_totals, vec![2; 5]);
        assert_eq!(f.spread(), 0);
    }

    #[test]
    fn too_many_folds() {
        assert!(matches!(build_folds(&counts(&[1, 2]), 3, 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn unbalanceable_pair() {
        let f = build_folds(&counts(&[3, 1]), 2, 0).unwrap();
        assert_eq!(f.spread(), 2);
    }

    #[test]
    fn fold_file_round_trip() {
        let c = counts(&[4, 3, 3, 2, 2, 1, 1]);
        let f = build_folds(&c, 2, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("folds.jsonl");
        f.write(&p).unwrap();
        assert_eq!(read_folds(&p, &c).unwrap(), f);
    }
}
