// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use common::{prepared_synthetic, small_gen};
use metapath_core::dense::DenseMatrix;
use metapath_core::eval::{
    accuracy, cell_split, knn_baseline, majority_baseline, run_experiment, split_seeds, sweep_parameter, ExperimentSpec, Method,
    SweepParam,
};
use metapath_core::hin::LabelAssignment;
use metapath_core::propagate::{CombinedSim, LabelFlag};
use proptest::prelude::*;

fn truth(labels: &[u32], classes: u32) -> LabelAssignment {
    LabelAssignment::new(classes, labels.iter().map(|&c| Some(c)).collect()).unwrap()
}

#[test]
fn split_examples() {
    let t = truth(&(0..100).map(|i| i % 4 + 1).collect::<Vec<_>>(), 4);
    let s = split_seeds(&t, 0.1, 3).unwrap();
    assert_eq!((s.seeds.len(), s.eval.len()), (10, 90));
    assert_eq!(s, split_seeds(&t, 0.1, 3).unwrap());
    let singles = truth(&[1, 2, 3, 4, 5, 6], 6);
    assert_eq!(split_seeds(&singles, 0.1, 0).unwrap().seeds.len(), 6);
    for f in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(split_seeds(&t, f, 0).unwrap_err().is_config());
    }
}

#[test]
fn accuracy_examples() {
    let t = truth(&[1, 2, 3, 1], 3);
    let all = [0, 1, 2, 3];
    assert_eq!(accuracy(&[1, 2, 3, 1], &t, &all).unwrap(), 100.0);
    assert_eq!(accuracy(&[2, 3, 1, 2], &t, &all).unwrap(), 0.0);
    assert_eq!(accuracy(&[1, 2, 3, 3], &t, &all).unwrap(), 75.0);
}

#[test]
fn knn_examples() {
    // node 0 is unlabeled; seeds 1..=3 with classes 2, 2, 5 and decreasing similarity
    let mut m = DenseMatrix::zeros(5, 5);
    for (j, v) in [(1, 0.9), (2, 0.5), (3, 0.4)] {
        m.set(0, j, v);
        m.set(j, 0, v);
    }
    let s = CombinedSim::from_matrix(m);
    let seeds = LabelAssignment::new(5, vec![None, Some(5), Some(2), Some(2), None]).unwrap();
    assert_eq!(knn_baseline(&s, &seeds, 1)[0].class, 5);
    assert_eq!(knn_baseline(&s, &seeds, 3)[0].class, 2);
    let isolated = &knn_baseline(&s, &seeds, 3)[4];
    assert_eq!((isolated.class, isolated.flag), (1, LabelFlag::Unreachable));
    let maj = majority_baseline(&seeds);
    assert_eq!(maj.iter().map(|a| a.class).collect::<Vec<_>>(), vec![2, 5, 2, 2, 2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_properties(labels in prop::collection::vec(1u32..6, 1..300), fraction in 0.01f64..0.99, seed in any::<u64>()) {
        let t = truth(&labels, 5);
        let s = split_seeds(&t, fraction, seed).unwrap();
        let seeds: BTreeSet<usize> = s.seeds.iter().copied().collect();
        let eval: BTreeSet<usize> = s.eval.iter().copied().collect();
        prop_assert_eq!(seeds.len(), s.seeds.len());
        prop_assert!(seeds.is_disjoint(&eval));
        prop_assert_eq!(seeds.len() + eval.len(), labels.len());
        let present: BTreeSet<u32> = labels.iter().copied().collect();
        let covered: BTreeSet<u32> = s.seeds.iter().map(|&i| labels[i]).collect();
        prop_assert_eq!(&covered, &present, "every class gets a seed");
        let target = (fraction * labels.len() as f64).ceil() as usize;
        // the one-per-class floor can only add seeds for classes whose share rounds to zero
        let counts: Vec<usize> = present.iter().map(|c| labels.iter().filter(|l| *l == c).count()).collect();
        let floored = counts.iter().filter(|&&m| m * target < labels.len()).count();
        prop_assert!(seeds.len() >= target && seeds.len() <= target + floored, "{} seeds, target {target}", seeds.len());
        if floored == 0 {
            prop_assert_eq!(seeds.len(), target);
        }
        prop_assert_eq!(&s, &split_seeds(&t, fraction, seed).unwrap());
    }

    #[test]
    fn accuracy_counts_matches(labels in prop::collection::vec(1u32..4, 1..100), flips in prop::collection::vec(any::<bool>(), 100)) {
        let t = truth(&labels, 3);
        let pred: Vec<u32> = labels.iter().zip(&flips).map(|(&l, &f)| if f { l % 3 + 1 } else { l }).collect();
        let eval: Vec<usize> = (0..labels.len()).collect();
        let correct = pred.iter().zip(&labels).filter(|(p, l)| p == l).count();
        let acc = accuracy(&pred, &t, &eval).unwrap();
        prop_assert!((acc - 100.0 * correct as f64 / labels.len() as f64).abs() < 1e-12);
    }
}

#[test]
fn majority_oracle_on_synthetic_data() {
    let (prepared, truth) = prepared_synthetic(&small_gen(400, 4.0, 1));
    let spec = ExperimentSpec { fractions: vec![0.1], repeats: 1, methods: vec![Method::Majority], ..Default::default() };
    let report = run_experiment(&prepared, &truth, &spec).unwrap();
    assert_eq!(report.records.len(), 1);

    // the seed split is a pure function of the spec, so it can be replayed
    let split = cell_split(&truth, spec.rng_seed, 0.1, 0).unwrap();
    let seed_labels = truth.restricted_to(&split.seeds);
    let majority = majority_baseline(&seed_labels)[split.eval[0]].class;
    let share = split.eval.iter().filter(|&&i| truth.get(i) == Some(majority)).count() as f64 / split.eval.len() as f64;
    assert!((report.records[0].accuracy - 100.0 * share).abs() < 1e-9);
    let largest = (1..=truth.classes())
        .map(|c| split.eval.iter().filter(|&&i| truth.get(i) == Some(c)).count())
        .max()
        .unwrap() as f64
        / split.eval.len() as f64;
    assert!(share <= largest + 1e-12);
}

#[test]
fn reports_are_reproducible() {
    let (prepared, truth) = prepared_synthetic(&small_gen(300, 4.0, 2));
    let spec = ExperimentSpec { fractions: vec![0.1, 0.3], repeats: 5, ..Default::default() };
    let a = run_experiment(&prepared, &truth, &spec).unwrap();
    let b = run_experiment(&prepared, &truth, &spec).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_markdown(), b.to_markdown());
    assert_eq!(a.weights_csv(), b.weights_csv());
    assert_eq!(a.records.len(), 2 * 5 * 3);
    let other = run_experiment(&prepared, &truth, &ExperimentSpec { rng_seed: 8, ..spec }).unwrap();
    assert_ne!(a.to_csv(), other.to_csv());
}

#[test]
fn cells_do_not_depend_on_other_fractions() {
    let (prepared, truth) = prepared_synthetic(&small_gen(300, 4.0, 5));
    let both = ExperimentSpec { fractions: vec![0.1, 0.3], repeats: 2, ..Default::default() };
    let only = ExperimentSpec { fractions: vec![0.3], ..both.clone() };
    let a = run_experiment(&prepared, &truth, &both).unwrap();
    let b = run_experiment(&prepared, &truth, &only).unwrap();
    for m in [Method::Tpathmine, Method::Knn, Method::Majority] {
        assert_eq!(a.accuracies(m, 0.3), b.accuracies(m, 0.3), "{m}");
    }
}

#[test]
fn sweeps() {
    let (prepared, truth) = prepared_synthetic(&small_gen(300, 4.0, 3));
    let spec = ExperimentSpec { fractions: vec![0.2], repeats: 2, methods: vec![Method::Tpathmine], ..Default::default() };
    let empty = sweep_parameter(&prepared, &truth, &spec, SweepParam::Lambda, &[]).unwrap();
    assert!(empty.rows.is_empty());
    assert_eq!(empty.to_csv().lines().count(), 1);

    let lambdas = [1.0, 2.0, 4.0, 6.0, 8.0];
    let table = sweep_parameter(&prepared, &truth, &spec, SweepParam::Lambda, &lambdas).unwrap();
    assert_eq!(table.rows.len(), 5);
    // sharing the fit across λ values gives the same numbers as separate runs
    for (row, &lambda) in table.rows.iter().zip(&lambdas) {
        let mut single = spec.clone();
        single.propagation.lambda = lambda;
        let direct = run_experiment(&prepared, &truth, &single).unwrap();
        assert_eq!(row.mean_accuracy, direct.summary(Method::Tpathmine, 0.2).0, "λ = {lambda}");
    }
    let eps = sweep_parameter(&prepared, &truth, &spec, SweepParam::Epsilon, &[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
    assert_eq!(eps.rows.len(), 5);
    assert!(eps.to_csv().starts_with("epsilon,fraction,method,mean_accuracy\n"));
    assert!("alpha".parse::<SweepParam>().unwrap_err().is_config());
}

#[test]
fn invalid_specs_are_rejected() {
    let (prepared, truth) = prepared_synthetic(&small_gen(100, 4.0, 4));
    for spec in [
        ExperimentSpec { fractions: vec![1.5], ..Default::default() },
        ExperimentSpec { repeats: 0, ..Default::default() },
        ExperimentSpec { methods: vec![], ..Default::default() },
        ExperimentSpec { knn_k: 0, ..Default::default() },
    ] {
        assert!(run_experiment(&prepared, &truth, &spec).unwrap_err().is_config());
    }
}
