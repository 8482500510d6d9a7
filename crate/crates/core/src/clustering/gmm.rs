use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix};

use super::kmeans::kmeans_weighted;
use crate::error::{Error, Result};
use crate::labels::{Algorithm, ClusterAssignment};
use crate::matrix::Matrix;
use crate::seed::RunSeed;

pub const REG_COVAR: f64 = 1e-6;
pub const MAX_ITER: usize = 200;
/// Convergence threshold on the gain of the per-sample mean log-likelihood.
pub const TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Matrix,
    pub covariances: Vec<DMatrix<f64>>,
    /// Mean per-sample log-likelihood of the final parameters.
    pub log_likelihood: f64,
    pub log_likelihood_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

struct Component {
    mean: Vec<f64>,
    /// Inverse Cholesky factor, lower triangular, row-major d × d.
    linv: Vec<f64>,
    log_norm: f64,
}

fn component(mean: &[f64], cov: &DMatrix<f64>, k: usize) -> Result<Component> {
    let d = mean.len();
    let chol = Cholesky::new(cov.clone()).ok_or_else(|| {
        Error::Numerical(format!(
            "GMM component {k}: covariance not positive definite despite {REG_COVAR:e} ridge (collapsed onto a subspace)"
        ))
    })?;
    let l = chol.l();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let inv = l
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::Numerical(format!("GMM component {k}: singular Cholesky factor")))?;
    let mut linv = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..=a {
            linv[a * d + b] = inv[(a, b)];
        }
    }
    Ok(Component {
        mean: mean.to_vec(),
        linv,
        log_norm: -0.5 * (d as f64 * (2.0 * PI).ln() + log_det),
    })
}

/// E-step: fills `resp` (n × k, row-major) and returns the mean log-likelihood.
fn e_step(x: &Matrix, weights: &[f64], comps: &[Component], resp: &mut [f64]) -> f64 {
    let k = comps.len();
    let d = x.cols();
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let mut total = 0.0;
    let mut diff = vec![0.0; d];
    for i in 0..x.rows() {
        let row = &mut resp[i * k..(i + 1) * k];
        for (c, comp) in comps.iter().enumerate() {
            for (j, v) in x.row(i).iter().enumerate() {
                diff[j] = v - comp.mean[j];
            }
            let mut maha = 0.0;
            for a in 0..d {
                let z: f64 = comp.linv[a * d..a * d + a + 1].iter().zip(&diff).map(|(l, v)| l * v).sum();
                maha += z * z;
            }
            row[c] = log_w[c] + comp.log_norm - 0.5 * maha;
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        for v in row.iter_mut() {
            *v = (*v - lse).exp();
        }
        total += lse;
    }
    total / x.rows() as f64
}

/// M-step from responsibilities (weights, means, ridge-regularized covariances).
fn m_step(x: &Matrix, resp: &[f64], k: usize) -> (Vec<f64>, Matrix, Vec<DMatrix<f64>>) {
    let (n, d) = (x.rows(), x.cols());
    let mut nk = vec![0.0; k];
    let mut means = Matrix::zeros(k, d);
    for i in 0..n {
        for c in 0..k {
            let r = resp[i * k + c];
            nk[c] += r;
            for (m, v) in means.row_mut(c).iter_mut().zip(x.row(i)) {
                *m += r * v;
            }
        }
    }
    for c in 0..k {
        // A component with no mass keeps a zero mean; its tiny weight is
        // floored below so the log stays finite.
        let denom = nk[c].max(10.0 * f64::MIN_POSITIVE);
        for m in means.row_mut(c) {
            *m /= denom;
        }
    }
    let mut covs = vec![DMatrix::zeros(d, d); k];
    let mut diff = vec![0.0; d];
    for i in 0..n {
        for c in 0..k {
            let r = resp[i * k + c];
            if r == 0.0 {
                continue;
            }
            for j in 0..d {
                diff[j] = x.get(i, j) - means.get(c, j);
            }
            let cov = &mut covs[c];
            for a in 0..d {
                let ra = r * diff[a];
                for b in 0..=a {
                    cov[(a, b)] += ra * diff[b];
                }
            }
        }
    }
    for c in 0..k {
        let denom = nk[c].max(10.0 * f64::MIN_POSITIVE);
        let cov = &mut covs[c];
        for a in 0..d {
            for b in 0..=a {
                let v = cov[(a, b)] / denom;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
            cov[(a, a)] += REG_COVAR;
        }
    }
    let weights = nk.iter().map(|v| (v / n as f64).max(f64::MIN_POSITIVE)).collect();
    (weights, means, covs)
}

/// EM for a full-covariance Gaussian mixture, initialised from k-means.
pub fn gmm_em(x: &Matrix, k: usize, seed: RunSeed) -> Result<(GmmModel, ClusterAssignment)> {
    let start = Instant::now();
    let (n, d) = (x.rows(), x.cols());
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("GMM needs 1 <= k <= n (k = {k}, n = {n})")));
    }
    if n <= d {
        return Err(Error::InsufficientData(format!("GMM needs more rows ({n}) than features ({d})")));
    }
    let (_, init) = kmeans_weighted(x, &vec![1.0; n], k, seed.derive("gmm.init", 0))?;
    let mut resp = vec![0.0; n * k];
    for (i, &c) in init.iter().enumerate() {
        resp[i * k + c] = 1.0;
    }
    let (mut weights, mut means, mut covs) = m_step(x, &resp, k);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut ll = f64::NEG_INFINITY;
    for _ in 0..MAX_ITER {
        iterations += 1;
        let comps = (0..k)
            .map(|c| component(means.row(c), &covs[c], c))
            .collect::<Result<Vec<_>>>()?;
        let next = e_step(x, &weights, &comps, &mut resp);
        if !next.is_finite() {
            return Err(Error::Numerical("GMM log-likelihood is not finite".into()));
        }
        history.push(next);
        let gain = next - ll;
        ll = next;
        if gain.abs() < TOLERANCE {
            converged = true;
            break;
        }
        (weights, means, covs) = m_step(x, &resp, k);
    }
    if !converged {
        // The loop ended on an M-step; refresh responsibilities for labelling.
        let comps = (0..k)
            .map(|c| component(means.row(c), &covs[c], c))
            .collect::<Result<Vec<_>>>()?;
        ll = e_step(x, &weights, &comps, &mut resp);
        history.push(ll);
    }
    let labels: Vec<i32> = (0..n)
        .map(|i| {
            let row = &resp[i * k..(i + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best as i32
        })
        .collect();
    let params = BTreeMap::from([("k".to_string(), k as f64), ("reg_covar".to_string(), REG_COVAR)]);
    let assignment =
        ClusterAssignment::new(Algorithm::Gmm, labels, params)?.with_fit_seconds(start.elapsed().as_secs_f64());
    Ok((
        GmmModel {
            weights,
            means,
            covariances: covs,
            log_likelihood: ll,
            log_likelihood_history: history,
            iterations,
            converged,
        },
        assignment,
    ))
}
