//! Multinomial (softmax) logistic regression with an L2 penalty on the
//! weights, fitted by L-BFGS with a backtracking line search.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{exp, ln, sqrt};
use crate::matrix::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    #[default]
    None,
    /// Each row weighted by `N / (K * n_class)`.
    InverseFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// L2 strength on the weights; intercepts are not penalised.
    pub lambda: f64,
    pub max_iter: usize,
    /// Gradient norm below which the fit stops.
    pub tol: f64,
    /// Correction pairs kept by L-BFGS.
    pub memory: usize,
    pub class_weighting: ClassWeighting,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_iter: 500,
            tol: 1e-5,
            memory: 10,
            class_weighting: ClassWeighting::None,
        }
    }
}

/// In-place numerically stable softmax.
pub fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = exp(*v - max);
        sum += *v;
    }
    logits.iter_mut().for_each(|v| *v /= sum);
}

/// Problem shape and data shared by loss evaluations.
pub struct Objective<'a> {
    pub x: &'a Matrix,
    pub y: &'a [usize],
    pub n_classes: usize,
    pub lambda: f64,
    pub sample_weights: Option<&'a [f64]>,
}

impl Objective<'_> {
    /// Parameter count: a `K x D` weight block then `K` intercepts.
    pub fn dim(&self) -> usize {
        self.n_classes * (self.x.cols() + 1)
    }

    /// `(1/N) * (sum_i s_i * NLL_i + lambda/2 * |W|^2)` and its gradient.
    pub fn loss_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (k, d, n) = (self.n_classes, self.x.cols(), self.x.rows());
        let (w, b) = theta.split_at(k * d);
        let mut grad = vec![0.0; theta.len()];
        let mut loss = 0.0;
        let mut p = vec![0.0; k];
        for (i, row) in self.x.iter_rows().enumerate() {
            for (c, pc) in p.iter_mut().enumerate() {
                *pc = b[c] + dot_sparse(&w[c * d..(c + 1) * d], row);
            }
            let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + ln(p.iter().map(|v| exp(v - max)).sum::<f64>());
            let s = self.sample_weights.map_or(1.0, |sw| sw[i]);
            loss += s * (lse - p[self.y[i]]);
            for (c, pc) in p.iter_mut().enumerate() {
                let r = s * (exp(*pc - lse) - if c == self.y[i] { 1.0 } else { 0.0 });
                *pc = r;
                grad[k * d + c] += r;
                for (j, &xj) in row.iter().enumerate() {
                    if xj != 0.0 {
                        grad[c * d + j] += r * xj;
                    }
                }
            }
        }
        let inv_n = 1.0 / n as f64;
        loss += 0.5 * self.lambda * w.iter().map(|v| v * v).sum::<f64>();
        for (g, wv) in grad[..k * d].iter_mut().zip(w) {
            *g += self.lambda * wv;
        }
        grad.iter_mut().for_each(|g| *g *= inv_n);
        (loss * inv_n, grad)
    }
}

fn dot_sparse(w: &[f64], x: &[f64]) -> f64 {
    w.iter()
        .zip(x)
        .filter(|(_, &xj)| xj != 0.0)
        .map(|(a, b)| a * b)
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxModel {
    /// `K x D` weights.
    pub weights: Matrix,
    pub intercepts: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Objective value after every accepted step, starting at the initial point.
    pub loss_trace: Vec<f64>,
}

impl SoftmaxModel {
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .weights
            .iter_rows()
            .zip(&self.intercepts)
            .map(|(w, b)| b + dot(w, x))
            .collect();
        softmax(&mut p);
        p
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::math::argmax(&self.predict_proba(x)).expect("at least one class")
    }
}

pub fn inverse_frequency_weights(y: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    y.iter().for_each(|&c| counts[c] += 1);
    let n = y.len() as f64;
    y.iter()
        .map(|&c| n / (n_classes as f64 * counts[c] as f64))
        .collect()
}

/// Fits a softmax regression on rows `x` with classes `y` in `0..n_classes`.
/// Starts from zero, so the result depends on the data alone.
pub fn fit_softmax(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    config: &LogisticConfig,
) -> Result<SoftmaxModel> {
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Config(alloc::format!(
            "class {bad} outside 0..{n_classes}"
        )));
    }
    let mut seen = vec![false; n_classes];
    y.iter().for_each(|&c| seen[c] = true);
    let present = seen.iter().filter(|s| **s).count();
    if present < 2 {
        return Err(Error::TooFewClusters(present));
    }
    if !(config.lambda >= 0.0) || config.memory == 0 {
        return Err(Error::Config(
            "lambda must be non-negative and memory positive".into(),
        ));
    }
    let weights = match config.class_weighting {
        ClassWeighting::None => None,
        ClassWeighting::InverseFrequency => Some(inverse_frequency_weights(y, n_classes)),
    };
    let objective = Objective {
        x,
        y,
        n_classes,
        lambda: config.lambda,
        sample_weights: weights.as_deref(),
    };
    let mut theta = vec![0.0; objective.dim()];
    let (mut f, mut g) = objective.loss_and_gradient(&theta);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        let gnorm = sqrt(dot(&g, &g));
        if gnorm < config.tol {
            converged = true;
            break;
        }
        let mut dir = two_loop(&g, &history);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if history.is_empty() {
            1.0 / gnorm.max(1.0)
        } else {
            1.0
        };
        let accepted = loop {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (ft, gt) = objective.loss_and_gradient(&trial);
            if ft <= f + 1e-4 * step * slope {
                break Some((trial, ft, gt));
            }
            step *= 0.5;
            if step < 1e-16 {
                break None;
            }
        };
        let Some((next, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        theta = next;
        f = fn_;
        g = gn;
        trace.push(f);
        iterations += 1;
    }
    if !converged && sqrt(dot(&g, &g)) < config.tol {
        converged = true;
    }
    let (k, d) = (n_classes, x.cols());
    Ok(SoftmaxModel {
        weights: Matrix::from_vec(k, d, theta[..k * d].to_vec())?,
        intercepts: theta[k * d..].to_vec(),
        iterations,
        converged,
        gradient_norm: sqrt(dot(&g, &g)),
        loss_trace: trace,
    })
}

/// L-BFGS search direction `-H g` from the stored correction pairs.
fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = vec![0.0; history.len()];
    for (i, (s, y, rho)) in history.iter().enumerate().rev() {
        alpha[i] = rho * dot(s, &q);
        q.iter_mut()
            .zip(y)
            .for_each(|(qv, yv)| *qv -= alpha[i] * yv);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, (s, y, rho)) in history.iter().enumerate() {
        let beta = rho * dot(y, &q);
        q.iter_mut()
            .zip(s)
            .for_each(|(qv, sv)| *qv += (alpha[i] - beta) * sv);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Matrix, Vec<usize>) {
        let x = Matrix::from_vec(
            6,
            2,
            vec![0.0, 1.0, 0.2, 0.9, 0.1, 1.2, 1.0, 0.0, 1.1, 0.2, 0.9, -0.1],
        )
        .unwrap();
        (x, vec![0, 0, 0, 1, 1, 1])
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut v = [1000.0, -1000.0, 3.0, 0.0];
        softmax(&mut v);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn separable_fit_is_exact_on_training_rows() {
        let (x, y) = toy();
        let cfg = LogisticConfig {
            lambda: 0.01,
            ..LogisticConfig::default()
        };
        let m = fit_softmax(&x, &y, 2, &cfg).unwrap();
        for (row, &c) in x.iter_rows().zip(&y) {
            assert_eq!(m.predict(row), c);
        }
        assert!(m.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = toy();
        assert_eq!(
            fit_softmax(&x, &[0; 6], 2, &LogisticConfig::default()).unwrap_err(),
            Error::TooFewClusters(1)
        );
    }

    #[test]
    fn inverse_frequency() {
        let w = inverse_frequency_weights(&[0, 0, 0, 1], 2);
        assert_eq!(w, vec![4.0 / 6.0, 4.0 / 6.0, 4.0 / 6.0, 2.0]);
    }
}
