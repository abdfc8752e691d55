// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{prepared_synthetic, small_gen};
use metapath_core::datagen::{generate_dataset, GenConfig, SyntheticData};
use metapath_core::eval::{run_experiment, ExperimentSpec, Method};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn users_of(data: &SyntheticData) -> usize {
    data.classes.len()
}

fn app_edges(data: &SyntheticData) -> impl Iterator<Item = &metapath_core::hin::EdgeRecord> {
    data.edges.iter().filter(|e| e.src.starts_with('u') && e.dst.starts_with('a'))
}

fn index(id: &str) -> usize {
    id[1..].parse().unwrap()
}

#[test]
fn same_seed_gives_identical_files() {
    let cfg = GenConfig { n_users: 100, n_apps: 50, n_types: 10, n_classes: 6, rng_seed: 42, ..Default::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_dataset(&cfg).unwrap().write(a.path()).unwrap();
    generate_dataset(&cfg).unwrap().write(b.path()).unwrap();
    for f in ["nodes.csv", "edges.csv", "schema.json", "truth.csv"] {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, y, "{f} differs");
    }
    let other = GenConfig { rng_seed: 43, ..cfg };
    assert_ne!(generate_dataset(&other).unwrap().edges, generate_dataset(&cfg).unwrap().edges);
}

#[test]
fn structural_invariants() {
    for seed in 0..5 {
        let cfg = GenConfig { n_users: 500, n_apps: 120, rng_seed: seed, ..Default::default() };
        let data = generate_dataset(&cfg).unwrap();
        let mut types_per_app: BTreeMap<usize, usize> = BTreeMap::new();
        for e in data.edges.iter().filter(|e| e.src.starts_with('a')) {
            *types_per_app.entry(index(&e.src)).or_default() += 1;
        }
        assert_eq!(types_per_app.len(), cfg.n_apps);
        assert!(types_per_app.values().all(|&k| (1..=8).contains(&k)));
        let with_apps: BTreeSet<usize> = app_edges(&data).map(|e| index(&e.src)).collect();
        assert_eq!(with_apps.len(), users_of(&data), "every user has an app edge");
        assert!(data.classes.iter().all(|c| (1..=6).contains(c)));
        for e in app_edges(&data) {
            assert!(e.weight >= 1.0 && e.weight <= 10.0 && e.weight.fract() == 0.0);
        }
        // user-type weight is at least the clicks routed through the user's apps
        let mut routed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let app_types: Vec<(usize, usize)> = data
            .edges
            .iter()
            .filter(|e| e.src.starts_with('a'))
            .map(|e| (index(&e.src), index(&e.dst)))
            .collect();
        for e in app_edges(&data) {
            for &(a, t) in app_types.iter().filter(|(a, _)| *a == index(&e.dst)) {
                let _ = a;
                *routed.entry((index(&e.src), t)).or_default() += e.weight;
            }
        }
        let direct: BTreeMap<(usize, usize), f64> = data
            .edges
            .iter()
            .filter(|e| e.src.starts_with('u') && e.dst.starts_with('t'))
            .map(|e| ((index(&e.src), index(&e.dst)), e.weight))
            .collect();
        for (k, w) in &routed {
            assert!(direct.get(k).copied().unwrap_or(0.0) >= *w, "user-type {k:?}");
        }
    }
}

#[test]
fn mean_apps_per_user_near_twelve() {
    let data = generate_dataset(&GenConfig::default()).unwrap();
    let mean = app_edges(&data).count() as f64 / users_of(&data) as f64;
    assert!((11.0..=13.0).contains(&mean), "mean apps per user {mean}");
}

/// Pearson chi-square test of independence on a classes × categories table.
fn chi_square_p(table: &[Vec<f64>]) -> f64 {
    let cols = table[0].len();
    let keep: Vec<usize> = (0..cols).filter(|&j| table.iter().any(|r| r[j] > 0.0)).collect();
    let row_sums: Vec<f64> = table.iter().map(|r| keep.iter().map(|&j| r[j]).sum()).collect();
    let col_sums: Vec<f64> = keep.iter().map(|&j| table.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for (r, rs) in table.iter().zip(&row_sums) {
        for (&j, cs) in keep.iter().zip(&col_sums) {
            let expected = rs * cs / total;
            stat += (r[j] - expected).powi(2) / expected;
        }
    }
    let dof = ((table.len() - 1) * (keep.len() - 1)) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

/// Users per class that touch each type through their app choices.
fn type_histograms(data: &SyntheticData, n_classes: usize, n_types: usize) -> Vec<Vec<f64>> {
    let mut types_of_app: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in data.edges.iter().filter(|e| e.src.starts_with('a')) {
        types_of_app.entry(index(&e.src)).or_default().push(index(&e.dst));
    }
    let mut table = vec![vec![0.0; n_types]; n_classes];
    for e in app_edges(data) {
        let class = data.classes[index(&e.src)] as usize - 1;
        for &t in &types_of_app[&index(&e.dst)] {
            table[class][t] += 1.0;
        }
    }
    table
}

#[test]
fn no_affinity_means_no_class_signal() {
    let cfg = GenConfig { affinity: 0.0, ..Default::default() };
    let data = generate_dataset(&cfg).unwrap();
    // one observation per user-app edge: which app was drawn
    let mut apps = vec![vec![0.0; cfg.n_apps]; cfg.n_classes as usize];
    for e in app_edges(&data) {
        apps[data.classes[index(&e.src)] as usize - 1][index(&e.dst)] += 1.0;
    }
    let p = chi_square_p(&apps);
    assert!(p > 0.01, "class × app table: p = {p}");
    let p = chi_square_p(&type_histograms(&data, cfg.n_classes as usize, cfg.n_types));
    assert!(p > 0.01, "class × type table: p = {p}");

    // the same test detects the signal when it is present
    let data = generate_dataset(&GenConfig { affinity: 4.0, ..cfg }).unwrap();
    let p = chi_square_p(&type_histograms(&data, cfg.n_classes as usize, cfg.n_types));
    assert!(p < 1e-6, "κ = 4 should be detectable, p = {p}");
}

#[test]
fn class_signal_is_learnable() {
    let spec = ExperimentSpec {
        fractions: vec![0.1],
        repeats: 1,
        methods: vec![Method::Tpathmine],
        ..Default::default()
    };
    let mean_accuracy = |kappa: f64| {
        (0..5u64)
            .map(|seed| {
                let (prepared, truth) = prepared_synthetic(&small_gen(600, kappa, seed));
                run_experiment(&prepared, &truth, &spec).unwrap().summary(Method::Tpathmine, 0.1).0
            })
            .sum::<f64>()
            / 5.0
    };
    let acc: Vec<f64> = [0.0, 1.0, 4.0].into_iter().map(mean_accuracy).collect();
    assert!(acc[0] < acc[1] && acc[1] < acc[2], "accuracy over κ = 0, 1, 4: {acc:?}");
}

#[test]
fn invalid_configs_are_rejected() {
    let base = GenConfig::default();
    for bad in [
        GenConfig { n_users: 0, ..base.clone() },
        GenConfig { n_classes: 1, ..base.clone() },
        GenConfig { types_per_app: (0, 3), ..base.clone() },
        GenConfig { types_per_app: (5, 3), ..base.clone() },
        GenConfig { types_per_app: (1, 41), ..base.clone() },
        GenConfig { affinity: -1.0, ..base.clone() },
        GenConfig { mean_apps_per_user: 0.0, ..base.clone() },
    ] {
        assert!(generate_dataset(&bad).unwrap_err().is_config(), "{bad:?}");
    }
}
