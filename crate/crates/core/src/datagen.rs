// SPDX-License-Identifier: Apache-2.0

//! Synthetic user/app/type networks with class-driven type preferences.
//!
//! Each class prefers a class-specific subset of application types. Users
//! draw apps by first drawing a type from their class preference and then a
//! uniform app of that type, so the class signal reaches users only through
//! the app-type structure.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, weighted::WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::io::{write_edges, write_nodes, write_schema, write_truth, EDGES_FILE, NODES_FILE, SCHEMA_FILE, TRUTH_FILE};
use crate::hin::{build_graph, EdgeRecord, HinGraph, LabelAssignment, NodeRecord, Schema};

const MAX_RETRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_users: usize,
    pub n_apps: usize,
    pub n_types: usize,
    pub n_classes: u32,
    pub types_per_app: (usize, usize),
    pub mean_apps_per_user: f64,
    /// κ: the class-specific part of a preference has weight κ / (1 + κ).
    pub affinity: f64,
    pub max_clicks_per_edge: u32,
    /// Average app clicks per direct type lookup.
    pub clicks_per_lookup: f64,
    pub rng_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_users: 10_000,
            n_apps: 1_000,
            n_types: 40,
            n_classes: 6,
            types_per_app: (1, 8),
            mean_apps_per_user: 12.0,
            affinity: 4.0,
            max_clicks_per_edge: 10,
            clicks_per_lookup: 4.0,
            rng_seed: 42,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_users == 0 || self.n_apps == 0 || self.n_types == 0 {
            return bad("n_users, n_apps and n_types must be >= 1".into());
        }
        if self.n_classes < 2 {
            return bad(format!("n_classes must be >= 2, got {}", self.n_classes));
        }
        let (lo, hi) = self.types_per_app;
        if lo == 0 || lo > hi || hi > self.n_types {
            return bad(format!(
                "types_per_app range {lo}..={hi} must satisfy 1 <= min <= max <= n_types ({})",
                self.n_types
            ));
        }
        if !(self.mean_apps_per_user > 0.0) {
            return bad("mean_apps_per_user must be > 0".into());
        }
        if !(self.affinity >= 0.0 && self.affinity.is_finite()) {
            return bad("affinity must be a finite value >= 0".into());
        }
        if self.max_clicks_per_edge == 0 {
            return bad("max_clicks_per_edge must be >= 1".into());
        }
        if !(self.clicks_per_lookup > 0.0) {
            return bad("clicks_per_lookup must be > 0".into());
        }
        Ok(())
    }
}

/// Generated tables plus ground-truth classes of the users.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub schema: Schema,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    /// Class per user, in user order.
    pub classes: Vec<u32>,
}

impl SyntheticData {
    pub fn build(&self) -> Result<(HinGraph, LabelAssignment)> {
        let (graph, _) = build_graph(&self.schema, &self.nodes, &self.edges)?;
        let truth = LabelAssignment::new(self.schema.classes, self.classes.iter().map(|&c| Some(c)).collect())?;
        Ok((graph, truth))
    }

    pub fn user_ids(&self) -> Vec<String> {
        (0..self.classes.len()).map(user_id).collect()
    }

    /// Writes `nodes.csv` (labels left empty), `edges.csv`, `schema.json` and `truth.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_schema(&dir.join(SCHEMA_FILE), &self.schema)?;
        write_nodes(&dir.join(NODES_FILE), &self.nodes)?;
        write_edges(&dir.join(EDGES_FILE), &self.edges)?;
        let truth = LabelAssignment::new(self.schema.classes, self.classes.iter().map(|&c| Some(c)).collect())?;
        write_truth(&dir.join(TRUTH_FILE), &self.user_ids(), &truth)
    }
}

fn user_id(k: usize) -> String {
    format!("u{k}")
}

fn app_id(k: usize) -> String {
    format!("a{k}")
}

fn type_id(k: usize) -> String {
    format!("t{k}")
}

/// Class-specific block of favored types for each class.
fn focus_blocks(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let focus = (cfg.n_types / cfg.n_classes as usize).max(1);
    (0..cfg.n_classes)
        .map(|_| index::sample(rng, cfg.n_types, focus).into_vec())
        .collect()
}

/// Uniform over all types mixed with uniform over `block`, the latter with
/// weight κ / (1 + κ).
fn preference(n_types: usize, block: &[usize], kappa: f64) -> Vec<f64> {
    let mix = kappa / (1.0 + kappa);
    let mut pref = vec![(1.0 - mix) / n_types as f64; n_types];
    for &k in block {
        pref[k] += mix / block.len() as f64;
    }
    pref
}

pub fn generate_dataset(cfg: &GenConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let blocks = focus_blocks(cfg, &mut rng);

    let mut app_types: Vec<Vec<usize>> = Vec::with_capacity(cfg.n_apps);
    let mut apps_of_type: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_types];
    for a in 0..cfg.n_apps {
        let k = rng.random_range(cfg.types_per_app.0..=cfg.types_per_app.1);
        let mut types = index::sample(&mut rng, cfg.n_types, k).into_vec();
        types.sort_unstable();
        for &t in &types {
            apps_of_type[t].push(a);
        }
        app_types.push(types);
    }

    let prefs: Vec<Vec<f64>> = blocks.iter().map(|b| preference(cfg.n_types, b, cfg.affinity)).collect();
    let samplers: Vec<WeightedIndex<f64>> = prefs
        .iter()
        .map(|p| WeightedIndex::new(p).expect("preference weights are positive"))
        .collect();
    let app_count = Poisson::new(cfg.mean_apps_per_user)
        .map_err(|e| Error::Config(format!("mean_apps_per_user: {e}")))?;

    let mut classes = Vec::with_capacity(cfg.n_users);
    let mut user_app_edges = Vec::new();
    let mut user_type_edges = Vec::new();
    for u in 0..cfg.n_users {
        let class = rng.random_range(0..cfg.n_classes);
        classes.push(class + 1);
        let sampler = &samplers[class as usize];
        let wanted = (app_count.sample(&mut rng) as usize).clamp(1, cfg.n_apps);

        let mut chosen: BTreeMap<usize, u32> = BTreeMap::new();
        let mut attempts = 0;
        while chosen.len() < wanted {
            attempts += 1;
            if attempts > MAX_RETRIES * wanted {
                return Err(Error::Generator(format!(
                    "could not draw {wanted} distinct apps for user {u}"
                )));
            }
            let t = sampler.sample(&mut rng);
            if apps_of_type[t].is_empty() {
                continue;
            }
            let a = apps_of_type[t][rng.random_range(0..apps_of_type[t].len())];
            if chosen.contains_key(&a) {
                continue;
            }
            let clicks = rng.random_range(1..=cfg.max_clicks_per_edge);
            chosen.insert(a, clicks);
        }

        let mut type_weight: BTreeMap<usize, u64> = BTreeMap::new();
        let mut total_clicks = 0u64;
        for (&a, &clicks) in &chosen {
            user_app_edges.push(EdgeRecord::new(user_id(u), app_id(a), clicks as f64));
            total_clicks += clicks as u64;
            for &t in &app_types[a] {
                *type_weight.entry(t).or_default() += clicks as u64;
            }
        }
        let lookups = Poisson::new(total_clicks as f64 / cfg.clicks_per_lookup)
            .map(|p| p.sample(&mut rng) as u64)
            .unwrap_or(0);
        for _ in 0..lookups {
            *type_weight.entry(sampler.sample(&mut rng)).or_default() += 1;
        }
        for (t, w) in type_weight {
            user_type_edges.push(EdgeRecord::new(user_id(u), type_id(t), w as f64));
        }
    }

    let mut nodes = Vec::with_capacity(cfg.n_users + cfg.n_apps + cfg.n_types);
    nodes.extend((0..cfg.n_users).map(|u| NodeRecord::new(user_id(u), "U")));
    nodes.extend((0..cfg.n_apps).map(|a| NodeRecord::new(app_id(a), "A")));
    nodes.extend((0..cfg.n_types).map(|t| NodeRecord::new(type_id(t), "T")));

    let mut edges = user_app_edges;
    for (a, types) in app_types.iter().enumerate() {
        edges.extend(types.iter().map(|&t| EdgeRecord::new(app_id(a), type_id(t), 1.0)));
    }
    edges.extend(user_type_edges);

    let schema = Schema {
        classes: cfg.n_classes,
        ..Schema::default()
    };
    Ok(SyntheticData {
        schema,
        nodes,
        edges,
        classes,
    })
}
