// SPDX-License-Identifier: Apache-2.0

//! `nodes.csv`, `edges.csv`, `schema.json` and `truth.csv` readers and writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hin::{build_graph, EdgeRecord, HinGraph, LabelAssignment, NodeRecord, Schema};

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const SCHEMA_FILE: &str = "schema.json";
pub const TRUTH_FILE: &str = "truth.csv";

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(rdr)
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn parse_label(path: &Path, rec: &csv::StringRecord, text: &str) -> Result<Option<u32>> {
    if text.is_empty() {
        return Ok(None);
    }
    text.parse::<u32>().map(Some).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: line_of(rec),
        message: format!("invalid label `{text}`"),
    })
}

pub fn read_nodes(path: &Path) -> Result<Vec<NodeRecord>> {
    let mut rdr = reader(path, &["id", "type", "label"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let label = parse_label(path, &rec, &rec[2])?;
        out.push(NodeRecord {
            id: rec[0].to_string(),
            node_type: rec[1].to_string(),
            label,
        });
    }
    Ok(out)
}

pub fn read_edges(path: &Path) -> Result<Vec<EdgeRecord>> {
    let mut rdr = reader(path, &["src", "dst", "weight"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let text = &rec[2];
        let weight = match text.parse::<u64>() {
            Ok(w) => w as f64,
            Err(_) => {
                return Err(Error::InvalidWeight {
                    src: rec[0].to_string(),
                    dst: rec[1].to_string(),
                    weight: text.to_string(),
                })
            }
        };
        out.push(EdgeRecord {
            src: rec[0].to_string(),
            dst: rec[1].to_string(),
            weight,
        });
    }
    Ok(out)
}

pub fn read_schema(path: &Path) -> Result<Schema> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let schema: Schema = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    schema.validate()?;
    Ok(schema)
}

/// Reads `(id, class)` rows from a two-column CSV with header `header`.
pub fn read_id_labels(path: &Path, header: [&str; 2]) -> Result<Vec<(String, u32)>> {
    let mut rdr = reader(path, &header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        match parse_label(path, &rec, &rec[1])? {
            Some(l) => out.push((rec[0].to_string(), l)),
            None => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_of(&rec),
                    message: "missing label".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Resolves `(id, class)` pairs against the target type of `graph`.
pub fn labels_from_pairs(graph: &HinGraph, pairs: &[(String, u32)]) -> Result<LabelAssignment> {
    let classes = graph.schema().classes;
    let mut labels = vec![None; graph.target_count()];
    for (id, l) in pairs {
        let idx = graph.target_index(id)?;
        if *l == 0 || *l > classes {
            return Err(Error::LabelOutOfRange {
                id: id.clone(),
                label: *l,
                classes,
            });
        }
        labels[idx] = Some(*l);
    }
    LabelAssignment::new(classes, labels)
}

/// A dataset directory loaded from disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: HinGraph,
    /// Labels carried in `nodes.csv`.
    pub labels: LabelAssignment,
    /// Ground truth from `truth.csv`, when present.
    pub truth: Option<LabelAssignment>,
}

impl Dataset {
    pub fn files(dir: &Path) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = [SCHEMA_FILE, NODES_FILE, EDGES_FILE]
            .iter()
            .map(|f| dir.join(f))
            .collect();
        let truth = dir.join(TRUTH_FILE);
        if truth.exists() {
            files.push(truth);
        }
        files
    }

    /// Labels for evaluation: `truth.csv` if present, else node labels.
    pub fn ground_truth(&self) -> &LabelAssignment {
        self.truth.as_ref().unwrap_or(&self.labels)
    }
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let schema = read_schema(&dir.join(SCHEMA_FILE))?;
    let nodes = read_nodes(&dir.join(NODES_FILE))?;
    let edges = read_edges(&dir.join(EDGES_FILE))?;
    let (graph, labels) = build_graph(&schema, &nodes, &edges)?;
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() {
        let pairs = read_id_labels(&truth_path, ["id", "class"])?;
        Some(labels_from_pairs(&graph, &pairs)?)
    } else {
        None
    };
    Ok(Dataset {
        graph,
        labels,
        truth,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_nodes(path: &Path, nodes: &[NodeRecord]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "id,type,label").map_err(io)?;
    for n in nodes {
        match n.label {
            Some(l) => writeln!(w, "{},{},{}", n.id, n.node_type, l),
            None => writeln!(w, "{},{},", n.id, n.node_type),
        }
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_edges(path: &Path, edges: &[EdgeRecord]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "src,dst,weight").map_err(io)?;
    for e in edges {
        writeln!(w, "{},{},{}", e.src, e.dst, e.weight as u64).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_schema(path: &Path, schema: &Schema) -> Result<()> {
    let mut w = create(path)?;
    let json = serde_json::to_string_pretty(schema).expect("schema serializes");
    writeln!(w, "{json}").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_truth(path: &Path, ids: &[String], truth: &LabelAssignment) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "id,class").map_err(io)?;
    for (id, l) in ids.iter().zip(truth.as_slice()) {
        if let Some(l) = l {
            writeln!(w, "{id},{l}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
