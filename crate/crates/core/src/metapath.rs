// SPDX-License-Identifier: Apache-2.0

//! Meta-paths over the target type, weighted commuting matrices and PathSim.
//!
//! A commuting matrix is the product of the relation matrices along a
//! meta-path, so entry `(i, j)` is the sum over all concrete node sequences
//! following the path of the product of their edge weights.
//!
//! Palindromic paths are held in factored form `M = L K Lᵀ`, where `L` is the
//! product of the first `h` relations and `K` the middle section. The split
//! point `h` is chosen at the smallest intermediate type, so for `U-A-T-A-U`
//! the factor is `L = W_UA W_AT` (users x types) and no middle section is
//! needed. Rows of `M` are then evaluated on demand without materialising the
//! dense users x users matrix.

use std::fmt;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::hin::HinGraph;
use crate::sparse::CsrMatrix;

/// The four user meta-paths used by default.
pub const DEFAULT_METAPATHS: [&str; 4] = ["U-A-U", "U-T-U", "U-A-T-A-U", "U-T-A-T-U"];

/// Validated sequence of node types starting and ending at the target type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MetaPath {
    types: Vec<usize>,
    names: Vec<String>,
}

impl MetaPath {
    pub fn type_ids(&self) -> &[usize] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn name(&self) -> String {
        self.names.join("-")
    }

    pub fn is_palindrome(&self) -> bool {
        self.types.iter().eq(self.types.iter().rev())
    }
}

impl fmt::Display for MetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names.join("-"))
    }
}

pub fn parse_metapath(text: &str, graph: &HinGraph) -> Result<MetaPath> {
    let fail = |reason: String| Error::MetaPath {
        path: text.to_string(),
        reason,
    };
    let text = text.trim();
    if text.is_empty() {
        return Err(fail("empty meta-path".into()));
    }
    let names: Vec<String> = text.split('-').map(|t| t.trim().to_string()).collect();
    let mut types = Vec::with_capacity(names.len());
    for n in &names {
        let ty = graph
            .type_id(n)
            .map_err(|_| fail(format!("unknown type `{n}`")))?;
        types.push(ty);
    }
    for w in types.windows(2) {
        if !graph.has_relation(w[0], w[1]) {
            return Err(fail(format!(
                "no schema relation {}→{}",
                graph.type_name(w[0]),
                graph.type_name(w[1])
            )));
        }
    }
    if types.len() < 3 {
        return Err(fail("a meta-path needs at least 3 types".into()));
    }
    let target = graph.target_type_id();
    if types[0] != target || types[types.len() - 1] != target {
        return Err(fail(format!(
            "endpoints must be the target type `{}`",
            graph.target_type()
        )));
    }
    Ok(MetaPath { types, names })
}

/// Dense commuting matrix over target-type nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutingMatrix {
    pub path: String,
    pub entries: DenseMatrix,
}

/// Dense PathSim matrix over target-type nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSimMatrix {
    pub path: String,
    pub entries: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainOrder {
    LeftToRight,
    RightToLeft,
}

fn relation_chain<'g>(graph: &'g HinGraph, types: &[usize]) -> Result<Vec<&'g CsrMatrix>> {
    types
        .windows(2)
        .map(|w| graph.relation_by_id(w[0], w[1]))
        .collect()
}

/// Product of a non-empty chain of sparse matrices.
pub fn multiply_chain(chain: &[&CsrMatrix], order: ChainOrder) -> CsrMatrix {
    assert!(!chain.is_empty());
    match order {
        ChainOrder::LeftToRight => chain[1..]
            .iter()
            .fold(chain[0].clone(), |acc, m| acc.matmul(m)),
        ChainOrder::RightToLeft => chain[..chain.len() - 1]
            .iter()
            .rev()
            .fold(chain[chain.len() - 1].clone(), |acc, m| m.matmul(&acc)),
    }
}

/// Commuting matrix by a plain sparse chain product in the given order.
pub fn commuting_matrix_chain(graph: &HinGraph, path: &MetaPath, order: ChainOrder) -> Result<CommutingMatrix> {
    let chain = relation_chain(graph, &path.types)?;
    Ok(CommutingMatrix {
        path: path.name(),
        entries: multiply_chain(&chain, order).to_dense(),
    })
}

/// Commuting matrix of `path`. Palindromic paths go through the factored
/// form and come out exactly symmetric.
pub fn commuting_matrix(graph: &HinGraph, path: &MetaPath) -> Result<CommutingMatrix> {
    if path.is_palindrome() {
        Ok(PathFactor::new(graph, path)?.commuting_matrix())
    } else {
        commuting_matrix_chain(graph, path, ChainOrder::LeftToRight)
    }
}

#[inline]
fn pathsim_value(m_ij: f64, d_i: f64, d_j: f64) -> f64 {
    let denom = d_i + d_j;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * m_ij / denom
    }
}

/// `s(i,j) = 2 M(i,j) / (M(i,i) + M(j,j))`, zero when the denominator is zero.
pub fn pathsim(m: &CommutingMatrix) -> Result<PathSimMatrix> {
    let e = &m.entries;
    if !e.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let n = e.rows();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let d_i = e.get(i, i);
        for j in 0..n {
            out.set(i, j, pathsim_value(e.get(i, j), d_i, e.get(j, j)));
        }
    }
    Ok(PathSimMatrix {
        path: m.path.clone(),
        entries: out,
    })
}

/// Pairwise PathSim lookup, implemented by dense matrices and path factors.
pub trait PathSimilarity: Sync {
    fn path_name(&self) -> String;
    fn size(&self) -> usize;
    fn similarity(&self, i: usize, j: usize) -> f64;
}

impl PathSimilarity for PathSimMatrix {
    fn path_name(&self) -> String {
        self.path.clone()
    }

    fn size(&self) -> usize {
        self.entries.rows()
    }

    fn similarity(&self, i: usize, j: usize) -> f64 {
        self.entries.get(i, j)
    }
}

/// Columns of `L`, stored dense when `L` is dense enough for axpy rows to win.
#[derive(Debug, Clone)]
enum Columns {
    Sparse(CsrMatrix),
    Dense(DenseMatrix),
}

const DENSE_COLUMNS_THRESHOLD: f64 = 0.125;

/// Factored commuting matrix `M = L K Lᵀ` of a palindromic meta-path.
#[derive(Debug, Clone)]
pub struct PathFactor {
    path: MetaPath,
    left: CsrMatrix,
    columns: Columns,
    core: Option<DenseMatrix>,
    diag: Vec<f64>,
}

/// Reusable buffers for row evaluation.
#[derive(Debug, Clone, Default)]
pub struct RowScratch {
    t: Vec<f64>,
    support: Vec<usize>,
}

impl PathFactor {
    pub fn new(graph: &HinGraph, path: &MetaPath) -> Result<Self> {
        if !path.is_palindrome() {
            return Err(Error::MetaPath {
                path: path.name(),
                reason: "factored form requires a palindromic path".into(),
            });
        }
        let types = &path.types;
        let half = (types.len() - 1) / 2;
        // smallest intermediate type; ties go to the longer left factor
        let split = (1..=half)
            .min_by_key(|&h| (graph.node_count(types[h]), std::cmp::Reverse(h)))
            .expect("path has at least 3 types");
        let chain = relation_chain(graph, types)?;
        let left = multiply_chain(&chain[..split], ChainOrder::LeftToRight);
        let core = if split < types.len() - 1 - split {
            let middle = multiply_chain(&chain[split..types.len() - 1 - split], ChainOrder::LeftToRight);
            Some(middle.to_dense())
        } else {
            None
        };
        let rank = left.cols();
        let columns = if left.density() >= DENSE_COLUMNS_THRESHOLD {
            Columns::Dense(left.transpose().to_dense())
        } else {
            Columns::Sparse(left.transpose())
        };
        let mut factor = PathFactor {
            path: path.clone(),
            left,
            columns,
            core,
            diag: Vec::new(),
        };
        let mut scratch = factor.scratch();
        factor.diag = (0..factor.size())
            .map(|i| {
                factor.project(i, &mut scratch);
                factor.dot_projected(&scratch, i)
            })
            .collect();
        debug_assert_eq!(factor.rank(), rank);
        Ok(factor)
    }

    pub fn path(&self) -> &MetaPath {
        &self.path
    }

    pub fn size(&self) -> usize {
        self.left.rows()
    }

    /// Inner dimension of the factorization.
    pub fn rank(&self) -> usize {
        self.left.cols()
    }

    /// Diagonal of the commuting matrix.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn scratch(&self) -> RowScratch {
        RowScratch {
            t: vec![0.0; self.rank()],
            support: Vec::with_capacity(self.rank()),
        }
    }

    /// `t = L_i K`, with its nonzero support in ascending order.
    fn project(&self, i: usize, s: &mut RowScratch) {
        s.t.iter_mut().for_each(|v| *v = 0.0);
        s.support.clear();
        match &self.core {
            None => {
                for (c, v) in self.left.row_iter(i) {
                    s.t[c] = v;
                    s.support.push(c);
                }
            }
            Some(core) => {
                for (a, v) in self.left.row_iter(i) {
                    for (t, k) in s.t.iter_mut().zip(core.row(a)) {
                        *t += v * k;
                    }
                }
                s.support.extend((0..s.t.len()).filter(|&c| s.t[c] != 0.0));
            }
        }
    }

    fn dot_projected(&self, s: &RowScratch, j: usize) -> f64 {
        let mut sum = 0.0;
        for (c, v) in self.left.row_iter(j) {
            sum += s.t[c] * v;
        }
        sum
    }

    pub fn commuting_entry(&self, i: usize, j: usize, scratch: &mut RowScratch) -> f64 {
        self.project(i, scratch);
        self.dot_projected(scratch, j)
    }

    /// Writes `M(i, j)` for `j` in `from..n` into `out[..n - from]`.
    pub fn commuting_row(&self, i: usize, from: usize, out: &mut [f64], scratch: &mut RowScratch) {
        let n = self.size();
        let out = &mut out[..n - from];
        out.iter_mut().for_each(|v| *v = 0.0);
        self.project(i, scratch);
        match &self.columns {
            Columns::Dense(cols) => {
                for &c in &scratch.support {
                    let t = scratch.t[c];
                    for (o, l) in out.iter_mut().zip(&cols.row(c)[from..]) {
                        *o += t * l;
                    }
                }
            }
            Columns::Sparse(cols) => {
                for &c in &scratch.support {
                    let t = scratch.t[c];
                    let (idx, val) = cols.row(c);
                    let start = idx.partition_point(|&j| j < from);
                    for (&j, &l) in idx[start..].iter().zip(&val[start..]) {
                        out[j - from] += t * l;
                    }
                }
            }
        }
    }

    /// Writes `s(i, j)` for `j` in `from..n` into `out[..n - from]`.
    pub fn pathsim_row(&self, i: usize, from: usize, out: &mut [f64], scratch: &mut RowScratch) {
        self.commuting_row(i, from, out, scratch);
        let d_i = self.diag[i];
        for (o, d_j) in out.iter_mut().zip(&self.diag[from..]) {
            *o = pathsim_value(*o, d_i, *d_j);
        }
    }

    pub fn pathsim_entry(&self, i: usize, j: usize, scratch: &mut RowScratch) -> f64 {
        let m = self.commuting_entry(i, j, scratch);
        pathsim_value(m, self.diag[i], self.diag[j])
    }

    /// Dense commuting matrix, upper triangle evaluated and mirrored.
    pub fn commuting_matrix(&self) -> CommutingMatrix {
        let n = self.size();
        let mut out = DenseMatrix::zeros(n, n);
        let mut scratch = self.scratch();
        for i in 0..n {
            let row = out.row_mut(i);
            self.commuting_row(i, i, &mut row[i..], &mut scratch);
        }
        out.mirror_upper();
        CommutingMatrix {
            path: self.path.name(),
            entries: out,
        }
    }

    pub fn pathsim_matrix(&self) -> PathSimMatrix {
        let n = self.size();
        let mut out = DenseMatrix::zeros(n, n);
        let mut scratch = self.scratch();
        for i in 0..n {
            let row = out.row_mut(i);
            self.pathsim_row(i, i, &mut row[i..], &mut scratch);
        }
        out.mirror_upper();
        PathSimMatrix {
            path: self.path.name(),
            entries: out,
        }
    }
}

impl PathSimilarity for PathFactor {
    fn path_name(&self) -> String {
        self.path.name()
    }

    fn size(&self) -> usize {
        PathFactor::size(self)
    }

    fn similarity(&self, i: usize, j: usize) -> f64 {
        let mut scratch = self.scratch();
        self.pathsim_entry(i, j, &mut scratch)
    }
}
