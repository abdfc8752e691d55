// SPDX-License-Identifier: Apache-2.0

//! Seed splits, accuracy, baselines, the repeated-split experiment and
//! parameter sweeps.

pub mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::LabelAssignment;
use crate::pipeline::{PreparedGraph, WeightConfig};
use crate::propagate::{
    assign_labels, propagate, spectral_radius_estimate, Assignment, CombinedSim, LabelFlag, LabelMatrix,
    PropagationConfig,
};
use crate::weights::BetaWeights;

pub use report::{ExperimentReport, RepeatDiagnostics, RunRecord, SweepRow, SweepTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tpathmine,
    Knn,
    Majority,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Tpathmine => "tpathmine",
            Method::Knn => "knn",
            Method::Majority => "majority",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            Method::Tpathmine => "TPathMine",
            Method::Knn => "KNN",
            Method::Majority => "Majority",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub methods: Vec<Method>,
    pub weights: WeightConfig,
    pub propagation: PropagationConfig,
    pub knn_k: usize,
    pub spectral_iters: usize,
    pub rng_seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            fractions: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            repeats: 5,
            methods: vec![Method::Tpathmine, Method::Knn, Method::Majority],
            weights: WeightConfig::default(),
            propagation: PropagationConfig::default(),
            knn_k: 5,
            spectral_iters: 20,
            rng_seed: 7,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(Error::Config(format!("seed fractions must lie in (0, 1), got {f}")));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.knn_k == 0 {
            return Err(Error::Config("knn_k must be >= 1".into()));
        }
        if self.weights.max_pairs == 0 {
            return Err(Error::Config("max_pairs must be >= 1".into()));
        }
        self.weights.svr.validate()?;
        self.propagation.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub seeds: Vec<usize>,
    pub eval: Vec<usize>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic seed for a `(fraction, repeat)` cell and a stream id.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(base), |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Seed of the `(fraction, repeat)` cell, `repeat` counted from 0. Keyed on
/// the fraction value, so a cell draws the same split whichever other
/// fractions are in the experiment.
pub fn cell_seed(base: u64, fraction: f64, repeat: usize) -> u64 {
    derive_seed(base, &[fraction.to_bits(), repeat as u64])
}

/// The seed/eval split an experiment with seed `base` uses for a cell.
pub fn cell_split(truth: &LabelAssignment, base: u64, fraction: f64, repeat: usize) -> Result<Split> {
    split_seeds(truth, fraction, derive_seed(cell_seed(base, fraction, repeat), &[0]))
}

/// Stratified seed selection: `⌈fraction·n⌉` labeled nodes apportioned to
/// classes by largest remainder, with at least one seed per nonempty class.
pub fn split_seeds(truth: &LabelAssignment, fraction: f64, rng_seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("seed fraction must lie in (0, 1), got {fraction}")));
    }
    let classes = truth.classes() as usize;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, l) in truth.as_slice().iter().enumerate() {
        if let Some(l) = l {
            members[*l as usize - 1].push(i);
        }
    }
    let n: usize = members.iter().map(Vec::len).sum();
    let total = (fraction * n as f64).ceil() as usize;
    if total == 0 {
        return Err(Error::EmptySplit { fraction });
    }
    let mut quota: Vec<usize> = members.iter().map(|m| total * m.len() / n).collect();
    let assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..classes).collect();
    // largest remainder first, lower class id on ties
    order.sort_by_key(|&c| (std::cmp::Reverse((total * members[c].len()) % n), c));
    for &c in order.iter().take(total - assigned) {
        quota[c] += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seeds = Vec::with_capacity(total);
    for (c, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let k = quota[c].clamp(1, m.len());
        seeds.extend(index::sample(&mut rng, m.len(), k).iter().map(|p| m[p]));
    }
    seeds.sort_unstable();
    let mut is_seed = vec![false; truth.len()];
    for &s in &seeds {
        is_seed[s] = true;
    }
    let eval = (0..truth.len())
        .filter(|&i| truth.get(i).is_some() && !is_seed[i])
        .collect();
    Ok(Split { seeds, eval })
}

/// Percentage of `eval` nodes whose prediction matches the truth.
pub fn accuracy(predicted: &[u32], truth: &LabelAssignment, eval: &[usize]) -> Result<f64> {
    if eval.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let correct = eval
        .iter()
        .filter(|&&i| truth.get(i) == Some(predicted[i]))
        .count();
    Ok(100.0 * correct as f64 / eval.len() as f64)
}

fn vote(counts: &[usize]) -> u32 {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best as u32 + 1
}

/// k-nearest seeds by `S_com`. Only seeds with positive similarity are
/// neighbors; similarity ties go to the lower node index, vote ties to the
/// lower class. Seeds keep their own label.
pub fn knn_baseline(s: &CombinedSim, seed_labels: &LabelAssignment, k: usize) -> Vec<Assignment> {
    let n = s.size();
    let classes = seed_labels.classes() as usize;
    let seeds = seed_labels.labeled_nodes();
    let mut out = Vec::with_capacity(n);
    let mut nearest: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    for i in 0..n {
        if let Some(l) = seed_labels.get(i) {
            out.push(Assignment { class: l, flag: LabelFlag::None });
            continue;
        }
        nearest.clear();
        let row = s.entries.row(i);
        for &j in &seeds {
            let v = row[j];
            if v <= 0.0 {
                continue;
            }
            // sorted by similarity desc; seeds visited in ascending index order
            if nearest.len() == k && v <= nearest[k - 1].0 {
                continue;
            }
            let pos = nearest.partition_point(|&(w, _)| w >= v);
            nearest.insert(pos, (v, j));
            nearest.truncate(k);
        }
        if nearest.is_empty() {
            out.push(Assignment { class: 1, flag: LabelFlag::Unreachable });
            continue;
        }
        let mut counts = vec![0usize; classes];
        for &(_, j) in &nearest {
            counts[seed_labels.get(j).expect("seed") as usize - 1] += 1;
        }
        out.push(Assignment { class: vote(&counts), flag: LabelFlag::None });
    }
    out
}

/// Every non-seed node gets the most frequent seed class.
pub fn majority_baseline(seed_labels: &LabelAssignment) -> Vec<Assignment> {
    let mut counts = vec![0usize; seed_labels.classes() as usize];
    for l in seed_labels.as_slice().iter().flatten() {
        counts[*l as usize - 1] += 1;
    }
    let majority = vote(&counts);
    seed_labels
        .as_slice()
        .iter()
        .map(|l| Assignment { class: l.unwrap_or(majority), flag: LabelFlag::None })
        .collect()
}

fn classes_of(a: &[Assignment]) -> Vec<u32> {
    a.iter().map(|x| x.class).collect()
}

/// Results of one `(fraction, repeat)` cell for each propagation setting.
struct CellOutcome {
    records: Vec<Vec<RunRecord>>,
    diagnostics: Vec<RepeatDiagnostics>,
}

fn run_cell(
    prepared: &PreparedGraph,
    truth: &LabelAssignment,
    spec: &ExperimentSpec,
    propagations: &[PropagationConfig],
    fi: usize,
    repeat: usize,
) -> Result<CellOutcome> {
    let started = Instant::now();
    let fraction = spec.fractions[fi];
    let cell_seed = cell_seed(spec.rng_seed, fraction, repeat);
    let split = cell_split(truth, spec.rng_seed, fraction, repeat)?;
    let seed_labels = truth.restricted_to(&split.seeds);

    let needs_graph = spec.methods.iter().any(|m| matches!(m, Method::Tpathmine | Method::Knn));
    let mut records: Vec<Vec<RunRecord>> = vec![Vec::new(); propagations.len()];
    let mut diagnostics = Vec::with_capacity(propagations.len());
    let record = |method: Method, acc: f64| RunRecord { method, fraction, repeat: repeat + 1, accuracy: acc };

    let (beta, s_com) = if needs_graph {
        let beta = prepared.fit_weights(&split.seeds, &seed_labels, &spec.weights, derive_seed(cell_seed, &[1]))?;
        let s_com = prepared.combine(&beta)?;
        (Some(beta), Some(s_com))
    } else {
        (None, None)
    };
    let spectral = match &s_com {
        Some(s) => spectral_radius_estimate(&s.entries, spec.spectral_iters),
        None => 0.0,
    };
    let knn = match (&s_com, spec.methods.contains(&Method::Knn)) {
        (Some(s), true) => Some(accuracy(&classes_of(&knn_baseline(s, &seed_labels, spec.knn_k)), truth, &split.eval)?),
        _ => None,
    };
    let majority = if spec.methods.contains(&Method::Majority) {
        Some(accuracy(&classes_of(&majority_baseline(&seed_labels)), truth, &split.eval)?)
    } else {
        None
    };

    for (k, prop) in propagations.iter().enumerate() {
        let mut iterations = 0;
        let mut unreachable = 0;
        for method in &spec.methods {
            let acc = match method {
                Method::Tpathmine => {
                    let s = s_com.as_ref().expect("graph methods build S_com");
                    let scores = propagate(s, &LabelMatrix::from_labels(&seed_labels), prop)?;
                    iterations = scores.iterations;
                    let assigned = assign_labels(&scores)?;
                    unreachable = assigned.iter().filter(|a| a.flag == LabelFlag::Unreachable).count();
                    accuracy(&classes_of(&assigned), truth, &split.eval)?
                }
                Method::Knn => knn.expect("computed above"),
                Method::Majority => majority.expect("computed above"),
            };
            records[k].push(record(*method, acc));
        }
        diagnostics.push(RepeatDiagnostics {
            fraction,
            repeat: repeat + 1,
            seeds: split.seeds.len(),
            beta: beta.clone(),
            spectral_radius: spectral,
            propagation_iterations: iterations,
            unreachable,
            seconds: 0.0,
        });
    }
    let seconds = started.elapsed().as_secs_f64();
    for d in &mut diagnostics {
        d.seconds = seconds;
    }
    Ok(CellOutcome { records, diagnostics })
}

/// Runs the grid of fractions x repeats once per propagation setting,
/// fitting weights and building `S_com` only once per cell.
fn run_grid(
    prepared: &PreparedGraph,
    truth: &LabelAssignment,
    spec: &ExperimentSpec,
    propagations: &[PropagationConfig],
) -> Result<Vec<ExperimentReport>> {
    spec.validate()?;
    if truth.len() != prepared.size() {
        return Err(Error::Dimension(format!(
            "truth has {} labels but the graph has {} target nodes",
            truth.len(),
            prepared.size()
        )));
    }
    let mut reports: Vec<ExperimentReport> = propagations
        .iter()
        .map(|_| ExperimentReport::new(prepared.path_names(), spec.fractions.clone(), spec.methods.clone()))
        .collect();
    for fi in 0..spec.fractions.len() {
        for repeat in 0..spec.repeats {
            let outcome = run_cell(prepared, truth, spec, propagations, fi, repeat).map_err(|e| {
                e.context(format!("fraction {} repeat {}", spec.fractions[fi], repeat + 1))
            })?;
            for (k, (recs, diag)) in outcome.records.into_iter().zip(outcome.diagnostics).enumerate() {
                reports[k].records.extend(recs);
                reports[k].diagnostics.push(diag);
            }
        }
    }
    Ok(reports)
}

/// Splits, fits, propagates and scores every `(fraction, repeat)` cell.
pub fn run_experiment(prepared: &PreparedGraph, truth: &LabelAssignment, spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let mut reports = run_grid(prepared, truth, spec, &[spec.propagation])?;
    Ok(reports.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Lambda,
    Epsilon,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::Epsilon => "epsilon",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweepParam::Lambda),
            "epsilon" => Ok(SweepParam::Epsilon),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}` (expected lambda or epsilon)"))),
        }
    }
}

/// Reruns the experiment for each value of one parameter.
///
/// A λ sweep shares the weight fit and fused operator of each cell across
/// values, which gives the same numbers as separate runs.
pub fn sweep_parameter(
    prepared: &PreparedGraph,
    truth: &LabelAssignment,
    spec: &ExperimentSpec,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepTable> {
    let reports = match param {
        SweepParam::Lambda => {
            if values.is_empty() {
                Vec::new()
            } else {
                let props: Vec<PropagationConfig> = values
                    .iter()
                    .map(|&lambda| PropagationConfig { lambda, ..spec.propagation })
                    .collect();
                run_grid(prepared, truth, spec, &props)?
            }
        }
        SweepParam::Epsilon => values
            .iter()
            .map(|&epsilon| {
                let mut s = spec.clone();
                s.weights.svr.epsilon = epsilon;
                run_experiment(prepared, truth, &s)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let mut rows = Vec::new();
    for (value, report) in values.iter().zip(&reports) {
        for &fraction in &spec.fractions {
            for &method in &spec.methods {
                let (mean, _) = report.summary(method, fraction);
                rows.push(SweepRow { value: *value, fraction, method, mean_accuracy: mean });
            }
        }
    }
    Ok(SweepTable { param, rows, reports })
}

/// Mean normalized weight per path over all diagnostics that carry weights.
pub fn mean_weights(report: &ExperimentReport) -> BTreeMap<String, f64> {
    let betas: Vec<&BetaWeights> = report.diagnostics.iter().filter_map(|d| d.beta.as_ref()).collect();
    report
        .paths
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mean = if betas.is_empty() {
                0.0
            } else {
                betas.iter().map(|b| b.normalized[k]).sum::<f64>() / betas.len() as f64
            };
            (p.clone(), mean)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    fn truth(labels: &[u32], classes: u32) -> LabelAssignment {
        LabelAssignment::new(classes, labels.iter().map(|&l| Some(l)).collect()).unwrap()
    }

    #[test]
    fn split_sizes() {
        let t = truth(&(0..100).map(|i| i % 6 + 1).collect::<Vec<_>>(), 6);
        let s = split_seeds(&t, 0.1, 3).unwrap();
        assert_eq!(s.seeds.len(), 10);
        assert_eq!(s.eval.len(), 90);
        assert_eq!(s, split_seeds(&t, 0.1, 3).unwrap());
        assert_ne!(s.seeds, split_seeds(&t, 0.1, 4).unwrap().seeds);
    }

    #[test]
    fn split_floor_of_one_per_class() {
        let t = truth(&[1, 2, 3, 4, 5, 6], 6);
        let s = split_seeds(&t, 0.1, 0).unwrap();
        assert_eq!(s.seeds.len(), 6);
        assert!(s.eval.is_empty());
    }

    #[test]
    fn split_errors() {
        let t = LabelAssignment::unlabeled(3, 5);
        assert!(matches!(split_seeds(&t, 0.5, 0), Err(Error::EmptySplit { .. })));
        assert!(split_seeds(&truth(&[1, 2], 2), 1.0, 0).is_err());
    }

    #[test]
    fn split_skips_unlabeled() {
        let t = LabelAssignment::new(2, vec![Some(1), None, Some(2), Some(1), None, Some(2)]).unwrap();
        let s = split_seeds(&t, 0.5, 1).unwrap();
        assert_eq!(s.seeds.len() + s.eval.len(), 4);
        assert!(!s.eval.contains(&1) && !s.seeds.contains(&4));
    }

    #[test]
    fn accuracy_values() {
        let t = truth(&[1, 2, 1, 2], 2);
        let all = [0, 1, 2, 3];
        assert_eq!(accuracy(&[1, 2, 1, 2], &t, &all).unwrap(), 100.0);
        assert_eq!(accuracy(&[2, 1, 2, 1], &t, &all).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 1, 1], &t, &all).unwrap(), 75.0);
        assert!(matches!(accuracy(&[1], &t, &[]), Err(Error::EmptyEvalSet)));
    }

    #[test]
    fn knn_examples() {
        // node 0 is unlabeled; seeds 1..=4
        let mut m = DenseMatrix::zeros(6, 6);
        let sims = [(1, 0.9), (2, 0.8), (3, 0.7), (4, 0.1)];
        for (j, v) in sims {
            m.set(0, j, v);
            m.set(j, 0, v);
        }
        let s = CombinedSim::from_matrix(m);
        let seeds = LabelAssignment::new(6, vec![None, Some(2), Some(5), Some(2), Some(3), None]).unwrap();
        let k1 = knn_baseline(&s, &seeds, 1);
        assert_eq!(k1[0].class, 2);
        let k3 = knn_baseline(&s, &seeds, 3);
        assert_eq!(k3[0].class, 2);
        assert_eq!(k3[5], Assignment { class: 1, flag: LabelFlag::Unreachable });
        assert_eq!(k3[2].class, 5);
    }

    #[test]
    fn knn_single_nonzero_seed() {
        let mut m = DenseMatrix::zeros(3, 3);
        m.set(0, 2, 0.4);
        m.set(2, 0, 0.4);
        let seeds = LabelAssignment::new(4, vec![None, Some(1), Some(3)]).unwrap();
        let out = knn_baseline(&CombinedSim::from_matrix(m), &seeds, 1);
        assert_eq!(out[0].class, 3);
    }

    #[test]
    fn majority_picks_largest_seed_class() {
        let seeds = LabelAssignment::new(3, vec![Some(2), Some(2), Some(1), None]).unwrap();
        let out = majority_baseline(&seeds);
        assert_eq!(classes_of(&out), vec![2, 2, 1, 2]);
    }

    #[test]
    fn derived_seeds_differ_per_cell() {
        let a = derive_seed(1, &[0, 0]);
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_eq!(a, derive_seed(1, &[0, 0]));
    }

    #[test]
    fn sweep_param_names() {
        assert_eq!("lambda".parse::<SweepParam>().unwrap(), SweepParam::Lambda);
        assert!("mu".parse::<SweepParam>().is_err());
    }
}
