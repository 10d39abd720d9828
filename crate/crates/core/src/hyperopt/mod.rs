// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sequential Bayesian hyperparameter search: a random initial design, then
//! expected-improvement proposals under a Gaussian-process surrogate.

pub mod gp;
pub mod space;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use space::{space_for, spec_from_assignment, Assignment, Domain, Param, Scale, SearchSpace, Value};

use crate::error::{Error, Result};
use gp::{expected_improvement, GaussianProcess};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub assignment: Assignment,
    pub value: f64,
    pub duration_secs: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Trial,
    pub history: Vec<Trial>,
    pub space: SearchSpace,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub budget: usize,
    pub seed: u64,
    /// Random trials before the surrogate takes over; defaults to
    /// `max(5, budget / 5)`.
    pub initial_design: Option<usize>,
    /// Proposals evaluated together; batches beyond the first proposal use
    /// the constant-liar heuristic.
    pub batch_size: usize,
    pub n_candidates: usize,
    pub log_path: Option<PathBuf>,
}

impl SearchOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        SearchOptions {
            budget,
            seed,
            initial_design: None,
            batch_size: 1,
            n_candidates: 1024,
            log_path: None,
        }
    }

    pub fn initial_trials(&self) -> usize {
        self.initial_design.unwrap_or((self.budget / 5).max(5)).min(self.budget)
    }
}

/// Pure random search with the same bookkeeping.
pub fn random_search<F>(objective: F, space: &SearchSpace, budget: usize, seed: u64) -> Result<SearchResult>
where
    F: Fn(&Assignment) -> Result<f64> + Sync,
{
    let mut opts = SearchOptions::new(budget, seed);
    opts.initial_design = Some(budget);
    bayes_search(objective, space, &opts)
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

struct Proposer<'a> {
    space: &'a SearchSpace,
    rng: ChaCha8Rng,
    n_candidates: usize,
}

impl Proposer<'_> {
    /// Snaps an encoded point onto the encoding of a valid assignment.
    fn snap(&self, u: &[f64]) -> (Assignment, Vec<f64>) {
        let a = self.space.decode(u);
        let e = self.space.encode(&a);
        (a, e)
    }

    fn random_unique(&mut self, seen: &[Vec<f64>]) -> Assignment {
        let mut last = None;
        for _ in 0..200 {
            let a = self.space.sample(&mut self.rng);
            let e = self.space.encode(&a);
            if !seen.iter().any(|s| same_point(s, &e)) {
                return a;
            }
            last = Some(a);
        }
        last.expect("at least one draw")
    }

    fn propose(&mut self, gp: &GaussianProcess, best: f64, seen: &[Vec<f64>]) -> Assignment {
        let score = |e: &[f64]| {
            let (m, s) = gp.predict(e);
            expected_improvement(m, s, best)
        };
        let mut pool: Vec<(f64, Assignment, Vec<f64>)> = Vec::with_capacity(self.n_candidates);
        for _ in 0..self.n_candidates {
            let a = self.space.sample(&mut self.rng);
            let e = self.space.encode(&a);
            if seen.iter().any(|s| same_point(s, &e)) {
                continue;
            }
            pool.push((score(&e), a, e));
        }
        pool.sort_by(|a, b| b.0.total_cmp(&a.0));
        pool.truncate(5);
        // local refinement: gaussian perturbations around the best candidates
        let step = Normal::new(0.0, 0.05).expect("valid sd");
        let dim = self.space.encoded_dim();
        for cand in pool.iter_mut() {
            for _ in 0..40 {
                let mut u = cand.2.clone();
                for v in u.iter_mut() {
                    *v += step.sample(&mut self.rng);
                }
                if dim > 0 && self.rng.random::<f64>() < 0.1 {
                    let i = self.rng.random_range(0..dim);
                    u[i] += 1.0;
                }
                let (a, e) = self.snap(&u);
                if seen.iter().any(|s| same_point(s, &e)) {
                    continue;
                }
                let s = score(&e);
                if s > cand.0 {
                    *cand = (s, a, e);
                }
            }
        }
        match pool.into_iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
            Some((_, a, _)) => a,
            None => self.random_unique(seen),
        }
    }
}

fn evaluate<F>(objective: &F, index: usize, assignment: Assignment, seed: u64) -> Trial
where
    F: Fn(&Assignment) -> Result<f64> + Sync,
{
    let start = Instant::now();
    let (value, error) = match objective(&assignment) {
        Ok(v) if v.is_finite() => (v, None),
        Ok(v) => (0.0, Some(format!("objective returned {v}"))),
        Err(e) => (0.0, Some(e.to_string())),
    };
    if let Some(e) = &error {
        log::warn!("trial {index} failed: {e}");
    }
    Trial {
        index,
        assignment,
        value,
        duration_secs: start.elapsed().as_secs_f64(),
        seed,
        error,
    }
}

/// Maximizes `objective` over `space`. Failing trials count as value 0.
pub fn bayes_search<F>(objective: F, space: &SearchSpace, opts: &SearchOptions) -> Result<SearchResult>
where
    F: Fn(&Assignment) -> Result<f64> + Sync,
{
    if opts.budget < 1 {
        return Err(Error::invalid("search budget must be at least 1"));
    }
    if opts.batch_size < 1 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    space.validate()?;
    let mut log_file = match &opts.log_path {
        Some(p) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p.display().to_string(), e))?,
        ),
        None => None,
    };
    let mut proposer = Proposer {
        space,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        n_candidates: opts.n_candidates.max(1),
    };
    let n_init = opts.initial_trials();
    let mut history: Vec<Trial> = Vec::with_capacity(opts.budget);
    let mut seen: Vec<Vec<f64>> = Vec::new();

    while history.len() < opts.budget {
        let start = history.len();
        let q = opts.batch_size.min(opts.budget - start);
        let mut batch: Vec<Assignment> = Vec::with_capacity(q);
        let mut pending = seen.clone();
        let mut lies: Vec<f64> = history.iter().map(|t| t.value).collect();
        for b in 0..q {
            let a = if start + b < n_init || history.is_empty() {
                proposer.random_unique(&pending)
            } else {
                let best = lies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let gp = GaussianProcess::fit(pending.clone(), &lies)?;
                proposer.propose(&gp, best, &pending)
            };
            pending.push(space.encode(&a));
            // constant liar: pretend the pending point scored the current best
            lies.push(lies.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0));
            batch.push(a);
        }
        let trials: Vec<Trial> = batch
            .into_par_iter()
            .enumerate()
            .map(|(b, a)| {
                let index = start + b;
                evaluate(&objective, index, a, opts.seed.wrapping_add(index as u64))
            })
            .collect();
        for t in trials {
            if let Some(f) = log_file.as_mut() {
                let line = serde_json::to_string(&t)?;
                writeln!(f, "{line}").map_err(|e| Error::io("trial log", e))?;
            }
            seen.push(space.encode(&t.assignment));
            history.push(t);
        }
    }
    let best = history
        .iter()
        .fold(None::<&Trial>, |acc, t| match acc {
            Some(b) if b.value >= t.value => Some(b),
            _ => Some(t),
        })
        .expect("budget >= 1")
        .clone();
    Ok(SearchResult {
        best,
        history,
        space: space.clone(),
    })
}
