use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// L2-regularised logistic regression, `P(NORMAL | x) = σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Objective `½|w|² + C·Σ log-loss` after every accepted iterate.
    pub loss_history: Vec<f64>,
    pub iterations: usize,
}

pub struct LogisticParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `theta` = weights followed by the (unpenalised) intercept.
fn objective(x: &Matrix, y: &[f64], theta: &[f64], c: f64) -> f64 {
    let d = x.cols();
    let reg: f64 = theta[..d].iter().map(|w| w * w).sum::<f64>() / 2.0;
    let loss: f64 = (0..x.rows())
        .map(|i| {
            let z = linear(x.row(i), theta);
            log1pexp(z) - y[i] * z
        })
        .sum();
    reg + c * loss
}

fn linear(row: &[f64], theta: &[f64]) -> f64 {
    let d = row.len();
    row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d]
}

impl Logistic {
    /// Damped Newton: full Newton steps, halved until the objective does
    /// not increase. Stops when the gradient's max-norm falls below `tol`.
    pub fn fit(x: &Matrix, y: &[u8], p: &LogisticParams) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        let t: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let mut theta = vec![0.0; d + 1];
        let mut loss = objective(x, &t, &theta, p.c);
        let mut history = vec![loss];
        let mut iterations = 0;
        for _ in 0..p.max_iter {
            let mut grad = DVector::<f64>::zeros(d + 1);
            let mut hess = DMatrix::<f64>::zeros(d + 1, d + 1);
            let mut aug = vec![1.0; d + 1];
            for i in 0..n {
                let row = x.row(i);
                aug[..d].copy_from_slice(row);
                let pr = sigmoid(linear(row, &theta));
                let r = p.c * (pr - t[i]);
                let h = p.c * pr * (1.0 - pr);
                for a in 0..=d {
                    grad[a] += r * aug[a];
                    let ha = h * aug[a];
                    for b in 0..=a {
                        hess[(a, b)] += ha * aug[b];
                    }
                }
            }
            for a in 0..d {
                grad[a] += theta[a];
                hess[(a, a)] += 1.0;
            }
            if grad.amax() < p.tol {
                break;
            }
            iterations += 1;
            for a in 0..=d {
                for b in 0..a {
                    hess[(b, a)] = hess[(a, b)];
                }
            }
            // The intercept direction has no ridge; a tiny jitter keeps the
            // factorisation alive on separable or constant data.
            hess[(d, d)] += 1e-10;
            let step = hess
                .cholesky()
                .ok_or_else(|| Error::Numerical("logistic regression Hessian is not positive definite".into()))?
                .solve(&grad);
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a - scale * s).collect();
                let l = objective(x, &t, &cand, p.c);
                if l <= loss {
                    let gain = loss - l;
                    theta = cand;
                    loss = l;
                    accepted = true;
                    if gain <= 1e-15 * loss.abs().max(1.0) && scale < 1.0 {
                        accepted = false;
                    }
                    break;
                }
                scale /= 2.0;
            }
            history.push(loss);
            if !accepted {
                break;
            }
        }
        Ok(Self {
            weights: theta[..d].to_vec(),
            intercept: theta[d],
            loss_history: history,
            iterations,
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.intercept
    }

    /// NORMAL when `P(NORMAL) > ½`; the boundary goes to ABNORMAL.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }
}
