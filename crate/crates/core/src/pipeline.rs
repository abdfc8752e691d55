// SPDX-License-Identifier: Apache-2.0

//! End-to-end classification: path factors, weight fitting, fusion and
//! propagation for one set of seed labels.

use crate::error::{Error, Result};
use crate::hin::{HinGraph, LabelAssignment};
use crate::metapath::{parse_metapath, MetaPath, PathFactor, PathSimilarity};
use crate::propagate::{
    assign_labels, combine_factored, propagate, spectral_radius_estimate, Assignment, CombinedSim, LabelMatrix,
    NormalizedFactor, PropagationConfig, ScoreMatrix,
};
use crate::weights::{build_training_pairs, fit_svr, rescale_targets, BetaWeights, PairTarget, SvrConfig, TargetMode};

/// Settings for fitting path weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightConfig {
    pub svr: SvrConfig,
    pub max_pairs: usize,
    pub target_mode: TargetMode,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            svr: SvrConfig::default(),
            max_pairs: 10_000,
            target_mode: TargetMode::Connections,
        }
    }
}

/// A graph with the normalized path factors of its meta-paths. Building it is
/// the expensive, seed-independent part of the pipeline.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub graph: HinGraph,
    pub paths: Vec<MetaPath>,
    pub factors: Vec<NormalizedFactor>,
}

impl PreparedGraph {
    pub fn new(graph: HinGraph, metapaths: &[String]) -> Result<Self> {
        if metapaths.is_empty() {
            return Err(Error::Config("at least one meta-path is required".into()));
        }
        let paths = metapaths
            .iter()
            .map(|p| parse_metapath(p, &graph))
            .collect::<Result<Vec<_>>>()?;
        let factors = paths
            .iter()
            .map(|p| {
                if !p.is_palindrome() {
                    return Err(Error::MetaPath {
                        path: p.name(),
                        reason: "PathSim requires a palindromic meta-path".into(),
                    });
                }
                Ok(NormalizedFactor::new(PathFactor::new(&graph, p)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedGraph { graph, paths, factors })
    }

    pub fn path_names(&self) -> Vec<String> {
        self.paths.iter().map(MetaPath::name).collect()
    }

    pub fn size(&self) -> usize {
        self.graph.target_count()
    }

    /// Fits path weights from seed pairs; targets are rescaled to `[0, 1]`.
    pub fn fit_weights(&self, seeds: &[usize], labels: &LabelAssignment, cfg: &WeightConfig, rng_seed: u64) -> Result<BetaWeights> {
        let sims: Vec<&dyn PathSimilarity> = self.factors.iter().map(|f| f.factor() as &dyn PathSimilarity).collect();
        let target = match cfg.target_mode {
            TargetMode::Connections => PairTarget::Connections,
            TargetMode::LabelAgreement => PairTarget::LabelAgreement(labels),
        };
        let mut pairs = build_training_pairs(&self.graph, &sims, seeds, target, cfg.max_pairs, rng_seed)?;
        rescale_targets(&mut pairs);
        fit_svr(&pairs, &cfg.svr)
    }

    pub fn combine(&self, beta: &BetaWeights) -> Result<CombinedSim> {
        combine_factored(&self.factors, beta)
    }
}

/// Output of one classification run.
#[derive(Debug, Clone)]
pub struct Classification {
    pub beta: BetaWeights,
    pub scores: ScoreMatrix,
    pub assignments: Vec<Assignment>,
    pub spectral_radius: f64,
}

/// Fits weights on the labeled nodes of `seed_labels`, propagates their
/// labels and assigns a class to every target node.
pub fn classify(
    prepared: &PreparedGraph,
    seed_labels: &LabelAssignment,
    weights: &WeightConfig,
    propagation: &PropagationConfig,
    spectral_iters: usize,
    rng_seed: u64,
) -> Result<Classification> {
    let seeds = seed_labels.labeled_nodes();
    let beta = prepared.fit_weights(&seeds, seed_labels, weights, rng_seed)?;
    let s_com = prepared.combine(&beta)?;
    let spectral_radius = spectral_radius_estimate(&s_com.entries, spectral_iters);
    let y = LabelMatrix::from_labels(seed_labels);
    let scores = propagate(&s_com, &y, propagation)?;
    let assignments = assign_labels(&scores)?;
    Ok(Classification {
        beta,
        scores,
        assignments,
        spectral_radius,
    })
}
