// SPDX-License-Identifier: MIT OR Apache-2.0

//! Random forest of depth-capped CART trees with Gini splits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ForestParams;
use crate::error::Result;
use crate::linalg::{DenseMatrix, Features};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class frequencies of the training samples reaching the leaf.
    Leaf(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, x: &Features, i: usize) -> &[f64] {
        let mut n = 0;
        loop {
            match &self.nodes[n] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => n = if x.get(i, *feature) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], n: usize) -> usize {
            match &nodes[n] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_proba(&self, x: &Features) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(x.n_rows(), self.n_classes);
        let t = self.trees.len() as f64;
        for i in 0..x.n_rows() {
            let row = out.row_mut(i);
            for tree in &self.trees {
                crate::linalg::axpy(1.0 / t, tree.leaf_for(x, i), row);
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        out
    }
}

struct Builder<'a> {
    x: &'a Features,
    y: &'a [usize],
    k: usize,
    max_depth: usize,
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

impl Builder<'_> {
    fn leaf(&self, samples: &[usize]) -> Node {
        let mut freq = vec![0.0; self.k];
        for &s in samples {
            freq[self.y[s]] += 1.0;
        }
        let n = samples.len() as f64;
        freq.iter_mut().for_each(|v| *v /= n);
        Node::Leaf(freq)
    }

    /// Candidate features: every column for dense input, the columns with a
    /// stored entry in some sample for sparse input (all others are constant).
    fn candidates(&self, samples: &[usize]) -> Vec<usize> {
        match self.x {
            Features::Dense(m) => (0..m.cols()).collect(),
            Features::Sparse(_) => {
                let mut f = Vec::new();
                for &s in samples {
                    self.x.for_each_in_row(s, |j, _| f.push(j));
                }
                f.sort_unstable();
                f.dedup();
                f
            }
        }
    }

    /// Best split over one feature: (impurity decrease, threshold).
    fn best_on(&self, samples: &[usize], feature: usize, parent: &[f64]) -> Option<(f64, f64)> {
        let mut vals: Vec<(f64, usize)> = samples.iter().map(|&s| (self.x.get(s, feature), self.y[s])).collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        if vals[0].0 == vals[vals.len() - 1].0 {
            return None;
        }
        let n = vals.len() as f64;
        let parent_gini = gini(parent, n);
        let mut left = vec![0.0; self.k];
        let mut right = parent.to_vec();
        let mut best: Option<(f64, f64)> = None;
        for idx in 0..vals.len() - 1 {
            left[vals[idx].1] += 1.0;
            right[vals[idx].1] -= 1.0;
            if vals[idx].0 == vals[idx + 1].0 {
                continue;
            }
            let nl = (idx + 1) as f64;
            let nr = n - nl;
            let gain = parent_gini - (nl / n) * gini(&left, nl) - (nr / n) * gini(&right, nr);
            if best.is_none_or(|(g, _)| gain > g) {
                let mut t = (vals[idx].0 + vals[idx + 1].0) / 2.0;
                if t >= vals[idx + 1].0 {
                    t = vals[idx].0;
                }
                best = Some((gain, t));
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mut counts = vec![0.0; self.k];
        for &s in &samples {
            counts[self.y[s]] += 1.0;
        }
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.max_depth || samples.len() < 2 {
            self.nodes.push(self.leaf(&samples));
            return id;
        }
        let mut feats = self.candidates(&samples);
        feats.shuffle(&mut self.rng);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut evaluated = 0;
        for f in feats {
            if evaluated >= self.max_features {
                break;
            }
            if let Some((gain, t)) = self.best_on(&samples, f, &counts) {
                evaluated += 1;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, t));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            self.nodes.push(self.leaf(&samples));
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().copied().partition(|&s| self.x.get(s, feature) <= threshold);
        self.nodes.push(Node::Leaf(Vec::new()));
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

pub(crate) fn fit(p: &ForestParams, x: &Features, y: &[usize], k: usize, seed: u64) -> Result<ForestModel> {
    let n = y.len();
    let max_features = ((x.n_cols() as f64).sqrt().floor() as usize).max(1);
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let tree_seeds: Vec<u64> = (0..p.n_trees).map(|_| seeder.random()).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut b = Builder {
                x,
                y,
                k,
                max_depth: p.max_depth,
                max_features,
                rng,
                nodes: Vec::new(),
            };
            b.build(sample, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel { n_classes: k, trees })
}
