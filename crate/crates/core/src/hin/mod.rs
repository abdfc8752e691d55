// SPDX-License-Identifier: Apache-2.0

//! Typed heterogeneous graph with click-weighted relation matrices.

pub mod io;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

fn default_classes() -> u32 {
    6
}

/// Node types, allowed relations and the target type whose nodes get classified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub node_types: Vec<String>,
    pub relations: Vec<(String, String)>,
    pub target_type: String,
    #[serde(default = "default_classes")]
    pub classes: u32,
}

impl Default for Schema {
    /// Users, apps and application types with the three observed link kinds.
    fn default() -> Self {
        Schema {
            node_types: vec!["U".into(), "A".into(), "T".into()],
            relations: vec![
                ("U".into(), "A".into()),
                ("A".into(), "T".into()),
                ("U".into(), "T".into()),
            ],
            target_type: "U".into(),
            classes: 6,
        }
    }
}

impl Schema {
    pub fn validate(&self) -> Result<()> {
        if self.node_types.is_empty() {
            return Err(Error::Schema("no node types declared".into()));
        }
        for (k, name) in self.node_types.iter().enumerate() {
            if name.is_empty() || name.contains('-') || name.contains(',') {
                return Err(Error::Schema(format!("invalid type name `{name}`")));
            }
            if self.node_types[..k].contains(name) {
                return Err(Error::Schema(format!("duplicate type name `{name}`")));
            }
        }
        if !self.node_types.contains(&self.target_type) {
            return Err(Error::Schema(format!(
                "target type `{}` is not a declared node type",
                self.target_type
            )));
        }
        if self.classes < 2 {
            return Err(Error::Schema(format!("class count must be >= 2, got {}", self.classes)));
        }
        let mut seen = Vec::new();
        for (s, d) in &self.relations {
            for t in [s, d] {
                if !self.node_types.contains(t) {
                    return Err(Error::Schema(format!("relation uses unknown type `{t}`")));
                }
            }
            if s == d {
                return Err(Error::Schema(format!("self relation {s}-{d} is not supported")));
            }
            let key = if s < d { (s, d) } else { (d, s) };
            if seen.contains(&key) {
                return Err(Error::Schema(format!("relation {s}-{d} declared twice")));
            }
            seen.push(key);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub node_type: String,
    pub label: Option<u32>,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>, node_type: impl Into<String>) -> Self {
        NodeRecord {
            id: id.into(),
            node_type: node_type.into(),
            label: None,
        }
    }

    pub fn labeled(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub weight: f64,
}

impl EdgeRecord {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, weight: f64) -> Self {
        EdgeRecord {
            src: src.into(),
            dst: dst.into(),
            weight,
        }
    }
}

/// Optional class id (1-based) per target-type node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelAssignment {
    classes: u32,
    labels: Vec<Option<u32>>,
}

impl LabelAssignment {
    pub fn new(classes: u32, labels: Vec<Option<u32>>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Schema(format!("class count must be >= 2, got {classes}")));
        }
        for (i, l) in labels.iter().enumerate() {
            if let Some(l) = *l {
                if l == 0 || l > classes {
                    return Err(Error::LabelOutOfRange {
                        id: format!("#{i}"),
                        label: l,
                        classes,
                    });
                }
            }
        }
        Ok(LabelAssignment { classes, labels })
    }

    pub fn unlabeled(classes: u32, n: usize) -> Self {
        LabelAssignment {
            classes,
            labels: vec![None; n],
        }
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, node: usize) -> Option<u32> {
        self.labels[node]
    }

    pub fn as_slice(&self) -> &[Option<u32>] {
        &self.labels
    }

    /// Indices of labeled nodes, ascending.
    pub fn labeled_nodes(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|_| i))
            .collect()
    }

    /// Keeps only the labels of `nodes`.
    pub fn restricted_to(&self, nodes: &[usize]) -> LabelAssignment {
        let mut labels = vec![None; self.labels.len()];
        for &i in nodes {
            labels[i] = self.labels[i];
        }
        LabelAssignment {
            classes: self.classes,
            labels,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct NodeIndex {
    ids: Vec<String>,
}

/// Immutable heterogeneous information network.
///
/// Node indices are dense per type and follow first-seen record order. Both
/// directions of every relation are stored; `(d, s)` is the exact transpose of
/// `(s, d)`.
#[derive(Debug, Clone)]
pub struct HinGraph {
    schema: Schema,
    type_ids: HashMap<String, usize>,
    nodes: Vec<NodeIndex>,
    lookup: HashMap<String, (usize, usize)>,
    relations: BTreeMap<(usize, usize), CsrMatrix>,
    target: usize,
}

impl HinGraph {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn target_type(&self) -> &str {
        &self.schema.target_type
    }

    pub fn type_id(&self, name: &str) -> Result<usize> {
        self.type_ids
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn type_name(&self, ty: usize) -> &str {
        &self.schema.node_types[ty]
    }

    pub fn target_type_id(&self) -> usize {
        self.target
    }

    pub fn node_count(&self, ty: usize) -> usize {
        self.nodes[ty].ids.len()
    }

    pub fn target_count(&self) -> usize {
        self.node_count(self.target)
    }

    pub fn node_ids(&self, ty: usize) -> &[String] {
        &self.nodes[ty].ids
    }

    /// `(type, index)` of a node id.
    pub fn locate(&self, id: &str) -> Option<(usize, usize)> {
        self.lookup.get(id).copied()
    }

    /// Index of a target-type node.
    pub fn target_index(&self, id: &str) -> Result<usize> {
        match self.locate(id) {
            Some((ty, idx)) if ty == self.target => Ok(idx),
            Some(_) => Err(Error::LabelOnNonTarget(id.to_string())),
            None => Err(Error::UnknownNode(id.to_string())),
        }
    }

    pub fn has_relation(&self, src: usize, dst: usize) -> bool {
        self.relations.contains_key(&(src, dst))
    }

    pub fn relation_by_id(&self, src: usize, dst: usize) -> Result<&CsrMatrix> {
        self.relations.get(&(src, dst)).ok_or_else(|| {
            Error::NoSuchRelation(self.type_name(src).to_string(), self.type_name(dst).to_string())
        })
    }

    /// Stored relation matrix between two node types.
    pub fn relation_matrix(&self, src: &str, dst: &str) -> Result<&CsrMatrix> {
        let (s, d) = (self.type_id(src)?, self.type_id(dst)?);
        self.relations
            .get(&(s, d))
            .ok_or_else(|| Error::NoSuchRelation(src.to_string(), dst.to_string()))
    }

    /// Types with a direct relation from the target type, in type order.
    pub fn target_neighbor_types(&self) -> Vec<usize> {
        (0..self.schema.node_types.len())
            .filter(|&z| self.has_relation(self.target, z))
            .collect()
    }
}

/// Builds a graph from node and edge tables.
///
/// Duplicate edges for the same endpoint pair are summed. Edges may be given
/// in either orientation of a schema relation.
pub fn build_graph(
    schema: &Schema,
    nodes: &[NodeRecord],
    edges: &[EdgeRecord],
) -> Result<(HinGraph, LabelAssignment)> {
    schema.validate()?;
    let type_ids: HashMap<String, usize> = schema
        .node_types
        .iter()
        .enumerate()
        .map(|(k, n)| (n.clone(), k))
        .collect();
    let target = type_ids[&schema.target_type];
    let mut index = vec![NodeIndex::default(); schema.node_types.len()];
    let mut lookup: HashMap<String, (usize, usize)> = HashMap::with_capacity(nodes.len());
    let mut labels: Vec<Option<u32>> = Vec::new();

    for rec in nodes {
        let ty = *type_ids
            .get(&rec.node_type)
            .ok_or_else(|| Error::UnknownType(rec.node_type.clone()))?;
        if rec.label.is_some() && ty != target {
            return Err(Error::LabelOnNonTarget(rec.id.clone()));
        }
        if let Some(l) = rec.label {
            if l == 0 || l > schema.classes {
                return Err(Error::LabelOutOfRange {
                    id: rec.id.clone(),
                    label: l,
                    classes: schema.classes,
                });
            }
        }
        let idx = match lookup.get(&rec.id) {
            Some(&(t, idx)) if t == ty => idx,
            Some(_) => {
                return Err(Error::ConflictingNode {
                    id: rec.id.clone(),
                    ty: rec.node_type.clone(),
                })
            }
            None => {
                let idx = index[ty].ids.len();
                index[ty].ids.push(rec.id.clone());
                lookup.insert(rec.id.clone(), (ty, idx));
                if ty == target {
                    labels.push(None);
                }
                idx
            }
        };
        if ty == target && labels[idx].is_none() {
            labels[idx] = rec.label;
        }
    }

    let mut triplets: BTreeMap<(usize, usize), Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (s, d) in &schema.relations {
        triplets.insert((type_ids[s], type_ids[d]), Vec::new());
    }
    for e in edges {
        let w = e.weight;
        if !(w.is_finite() && w > 0.0 && w.fract() == 0.0) {
            return Err(Error::InvalidWeight {
                src: e.src.clone(),
                dst: e.dst.clone(),
                weight: w.to_string(),
            });
        }
        let &(st, si) = lookup
            .get(&e.src)
            .ok_or_else(|| Error::UnknownNode(e.src.clone()))?;
        let &(dt, di) = lookup
            .get(&e.dst)
            .ok_or_else(|| Error::UnknownNode(e.dst.clone()))?;
        if let Some(list) = triplets.get_mut(&(st, dt)) {
            list.push((si, di, w));
        } else if let Some(list) = triplets.get_mut(&(dt, st)) {
            list.push((di, si, w));
        } else {
            return Err(Error::NoSuchRelation(
                schema.node_types[st].clone(),
                schema.node_types[dt].clone(),
            ));
        }
    }

    let mut relations = BTreeMap::new();
    for ((s, d), list) in triplets {
        let forward = CsrMatrix::from_triplets(index[s].ids.len(), index[d].ids.len(), list);
        relations.insert((d, s), forward.transpose());
        relations.insert((s, d), forward);
    }

    let graph = HinGraph {
        schema: schema.clone(),
        type_ids,
        nodes: index,
        lookup,
        relations,
        target,
    };
    let labels = LabelAssignment {
        classes: schema.classes,
        labels,
    };
    Ok((graph, labels))
}
