// SPDX-License-Identifier: Apache-2.0

//! Meta-path weights: regression pairs over seed nodes and their ε-SVR fit.
//!
//! Each pair of seed users contributes one sample whose features are the
//! PathSim values under every meta-path and whose target is the weighted
//! number of direct neighbors the two users share.

pub mod svr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{HinGraph, LabelAssignment};
use crate::metapath::PathSimilarity;

pub use svr::{SvrConfig, SvrSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub i: usize,
    pub j: usize,
    pub features: Vec<f64>,
    pub target: f64,
}

/// Fitted path weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaWeights {
    pub raw: Vec<f64>,
    pub bias: f64,
    /// Raw weights with negatives clamped to 0, scaled to sum to 1.
    pub normalized: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl BetaWeights {
    pub fn from_raw(raw: Vec<f64>, bias: f64) -> Self {
        let normalized = normalize_weights(&raw);
        BetaWeights {
            raw,
            bias,
            normalized,
            kkt_residual: 0.0,
            iterations: 0,
        }
    }

    /// Equal weights, used when every path should count the same.
    pub fn uniform(d: usize) -> Self {
        Self::from_raw(vec![1.0; d], 0.0)
    }
}

/// Clamps negatives to zero and rescales to a probability vector; uniform
/// when nothing positive remains.
pub fn normalize_weights(raw: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = raw.iter().map(|&b| if b > 0.0 { b } else { 0.0 }).collect();
    let total: f64 = clamped.iter().sum();
    if total > 0.0 {
        clamped.iter().map(|b| b / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    #[default]
    Connections,
    LabelAgreement,
}

/// Regression target for a pair of seeds.
#[derive(Debug, Clone, Copy)]
pub enum PairTarget<'a> {
    /// Weighted count of shared direct neighbors.
    Connections,
    /// 1 when both seeds carry the same class, else 0.
    LabelAgreement(&'a LabelAssignment),
}

/// Sum over every type `Z` linked to the target type of `(W_UZ W_UZᵀ)(i, j)`.
pub fn compute_connection_target(graph: &HinGraph, i: usize, j: usize) -> f64 {
    let target = graph.target_type_id();
    graph
        .target_neighbor_types()
        .into_iter()
        .map(|z| {
            let w = graph
                .relation_by_id(target, z)
                .expect("neighbor types come from stored relations");
            w.row_dot(i, w, j)
        })
        .sum()
}

/// Maps a rank in `0..s(s-1)/2` to the pair `(a, b)`, `a < b`, in row-major
/// order over the strict upper triangle; `ranks` must be ascending.
fn decode_pairs(s: usize, ranks: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(ranks.len());
    let (mut a, mut row_start) = (0usize, 0usize);
    for &k in ranks {
        while k >= row_start + (s - 1 - a) {
            row_start += s - 1 - a;
            a += 1;
        }
        out.push((a, a + 1 + (k - row_start)));
    }
    out
}

/// Pairs of seeds with PathSim features and targets.
///
/// All unordered pairs when there are at most `max_pairs`, otherwise a
/// uniform sample without replacement, ordered by pair rank.
pub fn build_training_pairs(
    graph: &HinGraph,
    sims: &[&dyn PathSimilarity],
    seeds: &[usize],
    target: PairTarget<'_>,
    max_pairs: usize,
    rng_seed: u64,
) -> Result<Vec<TrainingPair>> {
    if seeds.len() < 2 {
        return Err(Error::TooFewSeeds(seeds.len()));
    }
    if sims.is_empty() {
        return Err(Error::Dimension("no meta-path similarities given".into()));
    }
    let n = graph.target_count();
    if let Some(s) = sims.iter().find(|s| s.size() != n) {
        return Err(Error::Dimension(format!(
            "similarity for {} has size {}, graph has {} target nodes",
            s.path_name(),
            s.size(),
            n
        )));
    }
    let s = seeds.len();
    let total = s * (s - 1) / 2;
    let ranks: Vec<usize> = if total <= max_pairs {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut v = rand::seq::index::sample(&mut rng, total, max_pairs).into_vec();
        v.sort_unstable();
        v
    };
    decode_pairs(s, &ranks)
        .into_iter()
        .map(|(a, b)| {
            let (i, j) = (seeds[a], seeds[b]);
            let features = sims.iter().map(|sim| sim.similarity(i, j)).collect();
            let target = match target {
                PairTarget::Connections => compute_connection_target(graph, i, j),
                PairTarget::LabelAgreement(labels) => match (labels.get(i), labels.get(j)) {
                    (Some(x), Some(y)) if x == y => 1.0,
                    _ => 0.0,
                },
            };
            Ok(TrainingPair { i, j, features, target })
        })
        .collect()
}

/// Divides every target by the largest one; returns the divisor (1 when all
/// targets are zero).
pub fn rescale_targets(pairs: &mut [TrainingPair]) -> f64 {
    let max = pairs.iter().map(|p| p.target).fold(0.0, f64::max);
    let scale = if max > 0.0 { max } else { 1.0 };
    for p in pairs.iter_mut() {
        p.target /= scale;
    }
    scale
}

/// Full SVR solution for a set of pairs.
pub fn fit_svr_solution(pairs: &[TrainingPair], cfg: &SvrConfig) -> Result<SvrSolution> {
    let features: Vec<Vec<f64>> = pairs.iter().map(|p| p.features.clone()).collect();
    let targets: Vec<f64> = pairs.iter().map(|p| p.target).collect();
    svr::solve(&features, &targets, cfg)
}

/// Fits path weights by ε-SVR. Non-convergence is an error carrying the best
/// iterate.
pub fn fit_svr(pairs: &[TrainingPair], cfg: &SvrConfig) -> Result<BetaWeights> {
    let sol = fit_svr_solution(pairs, cfg)?;
    let mut beta = BetaWeights::from_raw(sol.weights, sol.bias);
    beta.kkt_residual = sol.kkt_residual;
    beta.iterations = sol.iterations;
    if !sol.converged {
        return Err(Error::SvrNotConverged {
            iterations: sol.iterations,
            residual: sol.kkt_residual,
            best: Box::new(beta),
        });
    }
    Ok(beta)
}
