// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures: small random networks and a brute-force path counter
//! that works from the edge list alone.

#![allow(dead_code)]

use std::collections::HashMap;

use metapath_core::hin::{build_graph, EdgeRecord, HinGraph, NodeRecord, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TYPES: [&str; 3] = ["U", "A", "T"];
pub const RELATIONS: [(&str, &str); 3] = [("U", "A"), ("A", "T"), ("U", "T")];

/// A random U/A/T network as raw records.
pub struct RandomHin {
    pub counts: HashMap<&'static str, usize>,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl RandomHin {
    pub fn generate(seed: u64, max_nodes: usize, max_weight: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = HashMap::new();
        let mut nodes = Vec::new();
        for ty in TYPES {
            let n = rng.random_range(1..=max_nodes);
            counts.insert(ty, n);
            nodes.extend((0..n).map(|k| NodeRecord::new(format!("{}{k}", ty.to_lowercase()), ty)));
        }
        let mut edges = Vec::new();
        for (s, d) in RELATIONS {
            let density: f64 = rng.random_range(0.05..0.6);
            for i in 0..counts[s] {
                for j in 0..counts[d] {
                    if rng.random_bool(density) {
                        let w = rng.random_range(1..=max_weight);
                        edges.push(EdgeRecord::new(
                            format!("{}{i}", s.to_lowercase()),
                            format!("{}{j}", d.to_lowercase()),
                            w as f64,
                        ));
                    }
                }
            }
        }
        RandomHin { counts, nodes, edges }
    }

    pub fn graph(&self) -> HinGraph {
        build_graph(&Schema::default(), &self.nodes, &self.edges).unwrap().0
    }

    /// Weighted adjacency `(type, index) -> [(type, index, weight)]`, both
    /// directions, straight from the edge records.
    fn adjacency(&self) -> HashMap<(char, usize), Vec<(char, usize, u64)>> {
        let parse = |id: &str| {
            let ty = id.chars().next().unwrap().to_ascii_uppercase();
            (ty, id[1..].parse::<usize>().unwrap())
        };
        let mut adj: HashMap<(char, usize), Vec<(char, usize, u64)>> = HashMap::new();
        for e in &self.edges {
            let (a, b) = (parse(&e.src), parse(&e.dst));
            adj.entry(a).or_default().push((b.0, b.1, e.weight as u64));
            adj.entry(b).or_default().push((a.0, a.1, e.weight as u64));
        }
        adj
    }

    /// Sum over every path instance following `path` of the product of its
    /// edge weights, by depth-first enumeration.
    pub fn enumerate_paths(&self, path: &str) -> Vec<Vec<u64>> {
        let types: Vec<char> = path.split('-').map(|t| t.chars().next().unwrap()).collect();
        let adj = self.adjacency();
        let start = self.counts[&*types[0].to_string()];
        let end = self.counts[&*types[types.len() - 1].to_string()];
        let mut out = vec![vec![0u64; end]; start];
        fn walk(
            adj: &HashMap<(char, usize), Vec<(char, usize, u64)>>,
            types: &[char],
            at: (char, usize),
            depth: usize,
            product: u64,
            row: &mut [u64],
        ) {
            if depth == types.len() - 1 {
                row[at.1] += product;
                return;
            }
            if let Some(next) = adj.get(&at) {
                for &(ty, idx, w) in next {
                    if ty == types[depth + 1] {
                        walk(adj, types, (ty, idx), depth + 1, product * w, row);
                    }
                }
            }
        }
        for (i, row) in out.iter_mut().enumerate() {
            walk(&adj, &types, (types[0], i), 0, 1, row);
        }
        out
    }
}

/// A small synthetic dataset with every default meta-path prepared.
pub fn prepared_synthetic(
    cfg: &metapath_core::datagen::GenConfig,
) -> (metapath_core::pipeline::PreparedGraph, metapath_core::hin::LabelAssignment) {
    let data = metapath_core::datagen::generate_dataset(cfg).unwrap();
    let (graph, truth) = data.build().unwrap();
    let paths: Vec<String> = metapath_core::metapath::DEFAULT_METAPATHS.iter().map(|p| p.to_string()).collect();
    (metapath_core::pipeline::PreparedGraph::new(graph, &paths).unwrap(), truth)
}

pub fn small_gen(n_users: usize, affinity: f64, rng_seed: u64) -> metapath_core::datagen::GenConfig {
    metapath_core::datagen::GenConfig {
        n_users,
        n_apps: n_users / 4,
        n_types: 12,
        n_classes: 4,
        affinity,
        rng_seed,
        ..Default::default()
    }
}
