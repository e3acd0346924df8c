//! SMO solver for the soft-margin dual
//!
//!   min_a  1/2 a'Qa - e'a   s.t.  y'a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j K_ij
//!
//! Working pairs are chosen as the maximal violating pair. The scan runs
//! over a seeded permutation of the indices, which only decides ties.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;

/// Substituted for a non-positive curvature along the pair direction.
const TAU: f64 = 1e-12;

/// Snapshot after one accepted pair update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoStep {
    /// Dual objective in maximization form, `e'a - 1/2 a'Qa`.
    pub dual_objective: f64,
    pub min_alpha: f64,
    pub max_alpha: f64,
    /// `y'a`, zero up to rounding.
    pub label_balance: f64,
}

pub(crate) struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub trace: Vec<SmoStep>,
}

pub(crate) struct SmoProblem<'a> {
    pub kernel: &'a [Vec<f64>],
    pub labels: &'a [f64],
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub record_trace: bool,
}

impl SmoProblem<'_> {
    fn q(&self, i: usize, j: usize) -> f64 {
        self.labels[i] * self.labels[j] * self.kernel[i][j]
    }

    pub fn solve(&self) -> Result<SmoSolution> {
        let n = self.labels.len();
        let y = self.labels;
        let c = self.c;
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let mut trace = Vec::new();

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));

        let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
        let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

        let mut iterations = 0;
        loop {
            let mut i = usize::MAX;
            let mut gmax = f64::NEG_INFINITY;
            let mut j = usize::MAX;
            let mut gmin = f64::INFINITY;
            for &t in &order {
                let v = -y[t] * grad[t];
                if in_up(alpha[t], y[t]) && v > gmax {
                    gmax = v;
                    i = t;
                }
                if in_low(alpha[t], y[t]) && v < gmin {
                    gmin = v;
                    j = t;
                }
            }

            let gap = gmax - gmin;
            if i == usize::MAX || j == usize::MAX || gap <= self.tolerance {
                break;
            }
            if iterations >= self.max_iterations {
                return Err(Error::NoConvergence {
                    iterations,
                    gap,
                    dual_objective: dual_objective(&alpha, &grad),
                });
            }
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let kii = self.kernel[i][i];
            let kjj = self.kernel[j][j];
            let qij = self.q(i, j);
            if y[i] != y[j] {
                let mut quad = kii + kjj + 2.0 * qij;
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
                let mut quad = kii + kjj - 2.0 * qij;
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
            // Rounding in the clip arithmetic can leave values a hair outside
            // the box.
            alpha[i] = alpha[i].clamp(0.0, c);
            alpha[j] = alpha[j].clamp(0.0, c);

            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            let (row_i, row_j) = (&self.kernel[i], &self.kernel[j]);
            let (yi, yj) = (y[i], y[j]);
            for (k, g) in grad.iter_mut().enumerate() {
                *g += y[k] * (yi * row_i[k] * di + yj * row_j[k] * dj);
            }

            if self.record_trace {
                trace.push(SmoStep {
                    dual_objective: dual_objective(&alpha, &grad),
                    min_alpha: alpha.iter().cloned().fold(f64::INFINITY, f64::min),
                    max_alpha: alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    label_balance: alpha.iter().zip(y).map(|(a, y)| a * y).sum(),
                });
            }
        }

        Ok(SmoSolution {
            bias: -rho(&alpha, &grad, y, c),
            alphas: alpha,
            iterations,
            trace,
        })
    }
}

/// `e'a - 1/2 a'Qa`, using `G = Qa - e`.
fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

/// Offset such that the decision function is `sum a_i y_i K(x_i, x) - rho`.
/// Averages `y_i G_i` over free variables, else the midpoint of the
/// feasible interval.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for ((&a, &g), &yt) in alpha.iter().zip(grad).zip(y) {
        let yg = yt * g;
        if a >= c {
            if yt < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a <= 0.0 {
            if yt > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Dense kernel matrix, rows computed in parallel.
pub(crate) fn gram<F>(n: usize, k: F) -> Vec<Vec<f64>>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    par::map_indexed(n, |i| (0..n).map(|j| k(i, j)).collect())
}
