// SPDX-License-Identifier: Apache-2.0

//! Symmetric normalization, weighted fusion of path similarities, and label
//! propagation `F = (1 - α) (I - α S_com)^{-1} Y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{dot, DenseMatrix};
use crate::error::{Error, Result};
use crate::hin::LabelAssignment;
use crate::metapath::{PathFactor, PathSimMatrix};
use crate::weights::BetaWeights;

/// `D^{-1/2} W D^{-1/2}` for one meta-path.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSim {
    pub path: String,
    pub entries: DenseMatrix,
}

/// `S_com = Σ_k β_k S^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedSim {
    pub entries: DenseMatrix,
    pub beta: Vec<f64>,
}

impl CombinedSim {
    /// Wraps an explicit operator, e.g. for tests or external callers.
    pub fn from_matrix(entries: DenseMatrix) -> Self {
        CombinedSim {
            entries,
            beta: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.entries.rows()
    }
}

/// One-hot seed labels, `n x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub entries: DenseMatrix,
}

impl LabelMatrix {
    pub fn from_labels(labels: &LabelAssignment) -> Self {
        let p = labels.classes() as usize;
        let mut entries = DenseMatrix::zeros(labels.len(), p);
        for (i, l) in labels.as_slice().iter().enumerate() {
            if let Some(l) = l {
                entries.set(i, *l as usize - 1, 1.0);
            }
        }
        LabelMatrix { entries }
    }

    pub fn classes(&self) -> usize {
        self.entries.cols()
    }
}

/// Propagated class scores, `n x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub entries: DenseMatrix,
    /// Fixed-point updates performed; 0 for the direct solve.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Closed,
    Iterative,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub solver: SolverKind,
    /// Largest `n` solved directly under [`SolverKind::Auto`].
    pub closed_max_n: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            lambda: 2.0,
            tol: 1e-10,
            max_iter: 1000,
            solver: SolverKind::Auto,
            closed_max_n: 5000,
        }
    }
}

impl PropagationConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        PropagationConfig {
            lambda,
            ..Default::default()
        }
    }

    /// `α = 1 / (1 + λ)`.
    pub fn alpha(&self) -> f64 {
        1.0 / (1.0 + self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Symmetric normalization of a nonnegative symmetric similarity matrix.
///
/// Zero-degree rows and columns stay zero. With `clamp_isolated == false` an
/// isolated node is an error instead.
pub fn normalize_sym(w: &DenseMatrix, clamp_isolated: bool) -> Result<NormalizedSim> {
    if !w.is_square() {
        return Err(Error::Dimension(format!("{}x{} similarity is not square", w.rows(), w.cols())));
    }
    let n = w.rows();
    for i in 0..n {
        for (j, &v) in w.row(i).iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeEntry { row: i, col: j, value: v });
            }
        }
    }
    if !w.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let inv = inv_sqrt_degrees((0..n).map(|i| w.row(i).iter().sum()));
    if !clamp_isolated {
        if let Some(i) = inv.iter().position(|&v| v == 0.0) {
            return Err(Error::Dimension(format!("node {i} has zero degree")));
        }
    }
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let row = out.row_mut(i);
        for (j, (o, v)) in row.iter_mut().zip(w.row(i)).enumerate() {
            *o = v * inv[i] * inv[j];
        }
    }
    Ok(NormalizedSim {
        path: String::new(),
        entries: out,
    })
}

pub fn normalize_pathsim(s: &PathSimMatrix) -> Result<NormalizedSim> {
    let mut out = normalize_sym(&s.entries, true)?;
    out.path = s.path.clone();
    Ok(out)
}

fn inv_sqrt_degrees(degrees: impl Iterator<Item = f64>) -> Vec<f64> {
    degrees
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect()
}

pub fn combine_similarities(sims: &[NormalizedSim], beta: &BetaWeights) -> Result<CombinedSim> {
    let weights = &beta.normalized;
    if sims.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} similarity matrices but {} weights",
            sims.len(),
            weights.len()
        )));
    }
    let n = sims.first().map_or(0, |s| s.entries.rows());
    if sims.iter().any(|s| s.entries.rows() != n || s.entries.cols() != n) {
        return Err(Error::Dimension("similarity matrices differ in size".into()));
    }
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let row = out.row_mut(i);
        for (j, o) in row.iter_mut().enumerate() {
            let mut v = 0.0;
            for (s, b) in sims.iter().zip(weights) {
                v += b * s.entries.get(i, j);
            }
            *o = v;
        }
    }
    Ok(CombinedSim {
        entries: out,
        beta: weights.clone(),
    })
}

/// A path factor with the degrees of its PathSim matrix, so normalized rows
/// can be produced without storing the matrix.
#[derive(Debug, Clone)]
pub struct NormalizedFactor {
    factor: PathFactor,
    inv_sqrt_degree: Vec<f64>,
}

impl NormalizedFactor {
    pub fn new(factor: PathFactor) -> Self {
        let n = factor.size();
        let degrees: Vec<f64> = (0..n)
            .into_par_iter()
            .map_init(
                || (factor.scratch(), vec![0.0; n]),
                |(scratch, row), i| {
                    factor.pathsim_row(i, 0, row, scratch);
                    row.iter().sum()
                },
            )
            .collect();
        NormalizedFactor {
            inv_sqrt_degree: inv_sqrt_degrees(degrees.into_iter()),
            factor,
        }
    }

    pub fn factor(&self) -> &PathFactor {
        &self.factor
    }

    pub fn size(&self) -> usize {
        self.factor.size()
    }

    pub fn inv_sqrt_degree(&self) -> &[f64] {
        &self.inv_sqrt_degree
    }
}

/// Builds `S_com` from path factors. Paths with zero weight are skipped.
///
/// Each upper-triangle row is computed independently and then mirrored, so
/// the result does not depend on the thread count.
pub fn combine_factored(sims: &[NormalizedFactor], beta: &BetaWeights) -> Result<CombinedSim> {
    let weights = &beta.normalized;
    if sims.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} path factors but {} weights",
            sims.len(),
            weights.len()
        )));
    }
    let n = sims.first().map_or(0, NormalizedFactor::size);
    if sims.iter().any(|s| s.size() != n) {
        return Err(Error::Dimension("path factors differ in size".into()));
    }
    let active: Vec<(&NormalizedFactor, f64)> = sims
        .iter()
        .zip(weights.iter().copied())
        .filter(|(_, b)| *b != 0.0)
        .collect();
    let mut out = DenseMatrix::zeros(n, n);
    out.par_rows_mut().for_each_init(
        || {
            (
                active.iter().map(|(s, _)| s.factor.scratch()).collect::<Vec<_>>(),
                vec![0.0; n],
            )
        },
        |(scratches, buf), (i, row)| {
            let row = &mut row[i..];
            for ((s, b), scratch) in active.iter().zip(scratches.iter_mut()) {
                s.factor.pathsim_row(i, i, buf, scratch);
                let scale = b * s.inv_sqrt_degree[i];
                let inv = &s.inv_sqrt_degree[i..];
                for ((o, v), d) in row.iter_mut().zip(buf.iter()).zip(inv) {
                    *o += scale * v * d;
                }
            }
        },
    );
    out.mirror_upper();
    Ok(CombinedSim {
        entries: out,
        beta: weights.clone(),
    })
}

fn check_dims(s: &CombinedSim, y: &LabelMatrix) -> Result<()> {
    if !s.entries.is_square() || s.entries.rows() != y.entries.rows() {
        return Err(Error::Dimension(format!(
            "operator is {}x{} but labels have {} rows",
            s.entries.rows(),
            s.entries.cols(),
            y.entries.rows()
        )));
    }
    Ok(())
}

/// Direct solve of `(I - α S) F = (1 - α) Y` by Cholesky factorization.
pub fn propagate_closed(s: &CombinedSim, y: &LabelMatrix, cfg: &PropagationConfig) -> Result<ScoreMatrix> {
    cfg.validate()?;
    check_dims(s, y)?;
    let n = s.size();
    let p = y.classes();
    let alpha = cfg.alpha();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let v = -alpha * s.entries.get(i, j);
        if i == j {
            1.0 + v
        } else {
            v
        }
    });
    let chol = nalgebra::Cholesky::new(a).ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if n > 0 {
        let condition = (hi / lo).powi(2);
        if !(condition < 1e12) {
            return Err(Error::IllConditioned { condition });
        }
    }
    let rhs = nalgebra::DMatrix::from_fn(n, p, |i, c| (1.0 - alpha) * y.entries.get(i, c));
    let x = chol.solve(&rhs);
    let mut entries = DenseMatrix::zeros(n, p);
    for i in 0..n {
        for c in 0..p {
            entries.set(i, c, x[(i, c)]);
        }
    }
    Ok(ScoreMatrix {
        entries,
        iterations: 0,
    })
}

/// `out = S · cols` for column-major `cols` (`p` vectors of length `n`),
/// written column-major.
fn apply_columns(s: &DenseMatrix, cols: &[Vec<f64>], out: &mut [Vec<f64>]) {
    let n = s.rows();
    let p = cols.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = s.row(i);
            cols.iter().map(|c| dot(row, c)).collect()
        })
        .collect();
    for (i, r) in rows.into_iter().enumerate() {
        for c in 0..p {
            out[c][i] = r[c];
        }
    }
}

fn to_columns(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.cols())
        .map(|c| (0..m.rows()).map(|i| m.get(i, c)).collect())
        .collect()
}

fn from_columns(cols: &[Vec<f64>], n: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, cols.len());
    for (c, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            m.set(i, c, *v);
        }
    }
    m
}

/// Synchronous fixed-point iteration `F ← α S F + (1 - α) Y` from `F = Y`,
/// stopping once successive iterates differ by less than `tol` (max norm).
pub fn propagate_iterative(s: &CombinedSim, y: &LabelMatrix, cfg: &PropagationConfig) -> Result<ScoreMatrix> {
    cfg.validate()?;
    check_dims(s, y)?;
    let n = s.size();
    let alpha = cfg.alpha();
    let y_cols = to_columns(&y.entries);
    let mut f = y_cols.clone();
    let mut next = y_cols.clone();
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        apply_columns(&s.entries, &f, &mut next);
        residual = 0.0;
        for (nc, (fc, yc)) in next.iter_mut().zip(f.iter().zip(&y_cols)) {
            for ((v, old), yv) in nc.iter_mut().zip(fc).zip(yc) {
                *v = alpha * *v + (1.0 - alpha) * yv;
                residual = residual.max((*v - old).abs());
            }
        }
        std::mem::swap(&mut f, &mut next);
        if residual < cfg.tol {
            return Ok(ScoreMatrix {
                entries: from_columns(&f, n),
                iterations: iter,
            });
        }
    }
    Err(Error::PropagationNotConverged {
        iterations: cfg.max_iter,
        residual,
        last: Box::new(ScoreMatrix {
            entries: from_columns(&f, n),
            iterations: cfg.max_iter,
        }),
    })
}

/// Dispatches on `cfg.solver`.
pub fn propagate(s: &CombinedSim, y: &LabelMatrix, cfg: &PropagationConfig) -> Result<ScoreMatrix> {
    let closed = match cfg.solver {
        SolverKind::Closed => true,
        SolverKind::Iterative => false,
        SolverKind::Auto => s.size() <= cfg.closed_max_n,
    };
    if closed {
        propagate_closed(s, y, cfg)
    } else {
        propagate_iterative(s, y, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelFlag {
    None,
    Tie,
    Unreachable,
}

impl LabelFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelFlag::None => "",
            LabelFlag::Tie => "tie",
            LabelFlag::Unreachable => "unreachable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    /// 1-based class id.
    pub class: u32,
    pub flag: LabelFlag,
}

/// Row-wise argmax with the smallest index winning ties; all-zero rows are
/// class 1 and flagged unreachable.
pub fn assign_labels(f: &ScoreMatrix) -> Result<Vec<Assignment>> {
    let m = &f.entries;
    (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            if row.iter().any(|v| v.is_nan()) {
                return Err(Error::NanScore(i));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Ok(Assignment {
                    class: 1,
                    flag: LabelFlag::Unreachable,
                });
            }
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            let ties = row.iter().filter(|&&v| v == row[best]).count();
            Ok(Assignment {
                class: best as u32 + 1,
                flag: if ties > 1 { LabelFlag::Tie } else { LabelFlag::None },
            })
        })
        .collect()
}

/// Power-iteration estimate of the spectral radius of a symmetric matrix.
///
/// For symmetric `S` the estimate `‖S x‖ / ‖x‖` never exceeds the true radius.
pub fn spectral_radius_estimate(s: &DenseMatrix, iterations: usize) -> f64 {
    let n = s.rows();
    if n == 0 {
        return 0.0;
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut y = vec![vec![0.0; n]];
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        apply_columns(s, &x, &mut y);
        let ny = norm(&y[0]);
        estimate = ny / norm(&x[0]);
        if ny == 0.0 {
            return 0.0;
        }
        for (a, b) in x[0].iter_mut().zip(&y[0]) {
            *a = b / ny;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> (CombinedSim, LabelMatrix) {
        let s = CombinedSim::from_matrix(DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]));
        let y = LabelMatrix {
            entries: DenseMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
        };
        (s, y)
    }

    #[test]
    fn normalize_unit_and_scaled() {
        let w = DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(normalize_sym(&w, true).unwrap().entries.max_abs_diff(&w) < 1e-15);
        let w2 = DenseMatrix::from_rows(vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert!(normalize_sym(&w2, true).unwrap().entries.max_abs_diff(&w) < 1e-15);
    }

    #[test]
    fn normalize_isolated_and_negative() {
        let w = DenseMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let s = normalize_sym(&w, true).unwrap();
        assert_eq!(s.entries.row(1), &[0.0, 0.0]);
        assert_eq!(s.entries.get(0, 1), 0.0);
        assert!(normalize_sym(&w, false).is_err());
        let neg = DenseMatrix::from_rows(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]);
        assert!(matches!(normalize_sym(&neg, true), Err(Error::NegativeEntry { .. })));
    }

    fn beta(v: Vec<f64>) -> BetaWeights {
        BetaWeights {
            raw: v.clone(),
            bias: 0.0,
            normalized: v,
            kkt_residual: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn combine_examples() {
        let s1 = NormalizedSim {
            path: "a".into(),
            entries: DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
        };
        let s0 = NormalizedSim {
            path: "b".into(),
            entries: DenseMatrix::zeros(2, 2),
        };
        assert_eq!(combine_similarities(&[s1.clone()], &beta(vec![1.0])).unwrap().entries, s1.entries);
        let same = combine_similarities(&[s1.clone(), s1.clone()], &beta(vec![0.5, 0.5])).unwrap();
        assert_eq!(same.entries, s1.entries);
        let mixed = combine_similarities(&[s1.clone(), s0], &beta(vec![0.25, 0.75])).unwrap();
        assert_eq!(
            mixed.entries,
            DenseMatrix::from_rows(vec![vec![0.0, 0.25], vec![0.25, 0.0]])
        );
        assert!(combine_similarities(&[s1], &beta(vec![0.5, 0.5])).is_err());
    }

    #[test]
    fn closed_form_two_nodes() {
        let (s, y) = two_node();
        let mut cfg = PropagationConfig::with_lambda(1.0);
        assert_eq!(cfg.alpha(), 0.5);
        let f = propagate_closed(&s, &y, &cfg).unwrap();
        assert!((f.entries.get(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.entries.get(1, 0) - 1.0 / 3.0).abs() < 1e-12);
        let labels = assign_labels(&f).unwrap();
        assert_eq!(labels[1].class, 1);

        cfg.tol = 1e-10;
        let g = propagate_iterative(&s, &y, &cfg).unwrap();
        assert!(f.entries.max_abs_diff(&g.entries) < 1e-8);
    }

    #[test]
    fn decoupled_nodes_keep_seed_labels() {
        let s = CombinedSim::from_matrix(DenseMatrix::zeros(3, 3));
        let y = LabelMatrix {
            entries: DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]]),
        };
        let cfg = PropagationConfig::default();
        let f = propagate_closed(&s, &y, &cfg).unwrap();
        let mut expected = y.entries.clone();
        expected.scale(2.0 / 3.0);
        assert!(f.entries.max_abs_diff(&expected) < 1e-15);
        let it = propagate_iterative(&s, &y, &cfg).unwrap();
        assert!(it.entries.max_abs_diff(&expected) < 1e-15);
        assert!(it.iterations <= 2);
        let classes: Vec<u32> = assign_labels(&f).unwrap().iter().map(|a| a.class).collect();
        assert_eq!(classes, vec![2, 1, 2]);
    }

    #[test]
    fn zero_labels_give_zero_scores() {
        let (s, _) = two_node();
        let y = LabelMatrix {
            entries: DenseMatrix::zeros(2, 3),
        };
        let f = propagate_closed(&s, &y, &PropagationConfig::default()).unwrap();
        assert_eq!(f.entries, DenseMatrix::zeros(2, 3));
    }

    #[test]
    fn small_alpha_keeps_seeds() {
        let (s, y) = two_node();
        let cfg = PropagationConfig::with_lambda(99.0);
        let f = propagate_iterative(&s, &y, &cfg).unwrap();
        assert!((f.entries.get(0, 0) - 0.99).abs() < 1e-3);
    }

    #[test]
    fn iteration_cap_reports_last_iterate() {
        let (s, y) = two_node();
        let cfg = PropagationConfig {
            max_iter: 2,
            ..PropagationConfig::with_lambda(0.01)
        };
        match propagate_iterative(&s, &y, &cfg) {
            Err(Error::PropagationNotConverged { iterations, last, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(last.entries.rows(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn singular_system_is_reported() {
        // ρ(S) = 2 makes I - 0.5 S singular
        let s = CombinedSim::from_matrix(DenseMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0]]));
        let y = LabelMatrix {
            entries: DenseMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
        };
        let err = propagate_closed(&s, &y, &PropagationConfig::with_lambda(1.0)).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }), "{err}");
    }

    #[test]
    fn label_rules() {
        let f = ScoreMatrix {
            entries: DenseMatrix::from_rows(vec![
                vec![0.2, 0.5, 0.3],
                vec![0.5, 0.5, 0.0],
                vec![0.0, 0.0, 0.0],
            ]),
            iterations: 0,
        };
        let a = assign_labels(&f).unwrap();
        assert_eq!(a[0], Assignment { class: 2, flag: LabelFlag::None });
        assert_eq!(a[1], Assignment { class: 1, flag: LabelFlag::Tie });
        assert_eq!(a[2], Assignment { class: 1, flag: LabelFlag::Unreachable });
        let nan = ScoreMatrix {
            entries: DenseMatrix::from_rows(vec![vec![f64::NAN, 0.0]]),
            iterations: 0,
        };
        assert!(matches!(assign_labels(&nan), Err(Error::NanScore(0))));
    }

    #[test]
    fn spectral_radius_of_swap() {
        let s = DenseMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((spectral_radius_estimate(&s, 10) - 1.0).abs() < 1e-12);
        assert_eq!(spectral_radius_estimate(&DenseMatrix::zeros(3, 3), 5), 0.0);
    }
}
