// SPDX-License-Identifier: Apache-2.0

//! Linear ε-insensitive support vector regression, solved in the dual by
//! sequential minimal optimization with second-order working-set selection.
//!
//! The dual has `2l` variables: `α_t` for the upper band edge (`t < l`, sign
//! +1) and `α*_t` for the lower one (`t >= l`, sign -1), each in `[0, C]`, with
//! the equality constraint `Σ α - Σ α* = 0` coming from the free bias. The
//! primal weights are kept explicitly as `w = Σ (α_t - α*_t) x_t` so gradients
//! cost `O(d)` per sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrConfig {
    pub epsilon: f64,
    pub penalty: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            epsilon: 0.2,
            penalty: 10.0,
            max_iter: 1_000_000,
            tolerance: 1e-6,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::Config(format!("C must be > 0, got {}", self.penalty)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("svr_tol must be > 0, got {}", self.tolerance)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("svr_max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Primal and dual solution of one SVR fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrSolution {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// `α_m - α*_m` per sample; nonzero only for samples on or outside the band.
    pub dual: Vec<f64>,
    /// Maximal KKT violation `m(α) - M(α)` at exit.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvrSolution {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    l: usize,
}

impl Problem<'_> {
    #[inline]
    fn sample(&self, t: usize) -> usize {
        if t < self.l {
            t
        } else {
            t - self.l
        }
    }

    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.l {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn kernel(&self, a: usize, b: usize) -> f64 {
        self.x[a].iter().zip(&self.x[b]).map(|(u, v)| u * v).sum()
    }
}

/// Fits `f(x) = w·x + b` to `(features, targets)`.
///
/// On hitting `max_iter` the best iterate is returned with `converged == false`.
pub fn solve(features: &[Vec<f64>], targets: &[f64], cfg: &SvrConfig) -> Result<SvrSolution> {
    cfg.validate()?;
    let l = features.len();
    if l == 0 || l != targets.len() {
        return Err(Error::Dimension(format!(
            "svr needs matching, non-empty samples ({} features, {} targets)",
            l,
            targets.len()
        )));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|f| f.len() != d) {
        return Err(Error::Dimension("svr features must share a nonzero length".into()));
    }
    let c = cfg.penalty;
    let eps = cfg.epsilon;
    let prob = Problem { x: features, l };
    let diag: Vec<f64> = (0..l).map(|m| prob.kernel(m, m)).collect();

    let mut alpha = vec![0.0f64; 2 * l];
    let mut w = vec![0.0f64; d];
    let mut fx = vec![0.0f64; l];
    let mut grad = vec![0.0f64; 2 * l];
    let mut residual;
    let mut iterations = 0;
    let mut converged = false;

    loop {
        // G_t = y_t (w·x_t) + p_t, with p_t = ε - y_t R_t
        for (m, f) in fx.iter_mut().enumerate() {
            *f = w.iter().zip(&features[m]).map(|(a, b)| a * b).sum();
        }
        for m in 0..l {
            grad[m] = fx[m] + eps - targets[m];
            grad[m + l] = -fx[m] + eps + targets[m];
        }

        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..2 * l {
            let y = prob.sign(t);
            let candidate = if y > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if candidate && -y * grad[t] >= gmax {
                gmax = -y * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            let yi = prob.sign(i);
            let si = prob.sample(i);
            let mut best = f64::INFINITY;
            for t in 0..2 * l {
                let y = prob.sign(t);
                let candidate = if y > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
                if !candidate {
                    continue;
                }
                let yg = y * grad[t];
                if yg >= gmax2 {
                    gmax2 = yg;
                }
                let grad_diff = gmax + yg;
                if grad_diff > 0.0 {
                    let st = prob.sample(t);
                    let q_it = yi * y * prob.kernel(si, st);
                    let mut quad = diag[si] + diag[st] - 2.0 * yi * y * q_it;
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        residual = (gmax + gmax2).max(0.0);
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax + gmax2 >= cfg.tolerance => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let (yi, yj) = (prob.sign(i), prob.sign(j));
        let (si, sj) = (prob.sample(i), prob.sample(j));
        let q_ij = yi * yj * prob.kernel(si, sj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let mut quad = diag[si] + diag[sj] + 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[si] + diag[sj] - 2.0 * q_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (yi * (alpha[i] - old_i), yj * (alpha[j] - old_j));
        for (k, wk) in w.iter_mut().enumerate() {
            *wk += di * features[si][k] + dj * features[sj][k];
        }
    }

    // refresh gradients for the final α
    for (m, f) in fx.iter_mut().enumerate() {
        *f = w.iter().zip(&features[m]).map(|(a, b)| a * b).sum();
    }
    for m in 0..l {
        grad[m] = fx[m] + eps - targets[m];
        grad[m + l] = -fx[m] + eps + targets[m];
    }
    let bias = -rho(&prob, &alpha, &grad, c);
    let dual = (0..l).map(|m| alpha[m] - alpha[m + l]).collect();
    Ok(SvrSolution {
        weights: w,
        bias,
        dual,
        kkt_residual: residual,
        iterations,
        converged,
    })
}

/// Offset `ρ` (the decision function is `w·x - ρ`): mean of `y_t G_t` over
/// free variables, or the midpoint of the feasible interval when none are free.
fn rho(prob: &Problem<'_>, alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0f64);
    for t in 0..alpha.len() {
        let y = prob.sign(t);
        let yg = y * grad[t];
        if alpha[t] >= c {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}
