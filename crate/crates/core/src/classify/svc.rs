use std::collections::HashMap;
use std::rc::Rc;

use crate::distance::squared_euclidean;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const TAU: f64 = 1e-12;

/// RBF support vector classifier trained by SMO with second-order working
/// set selection. Labels map to `+1` (NORMAL) and `-1` (ABNORMAL).
#[derive(Debug, Clone, PartialEq)]
pub struct Svc {
    pub gamma: f64,
    pub support: Matrix,
    /// `αᵢ·yᵢ` per support vector.
    pub dual_coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct SvcParams {
    pub c: f64,
    pub tol: f64,
    /// `None` = `1 / (d · mean column variance)`.
    pub gamma: Option<f64>,
    pub cache_mb: usize,
    pub max_iter: Option<usize>,
}

/// Full solver state, kept for inspection of the optimality conditions.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Gradient of the dual objective, `(Qα)ᵢ − 1`.
    pub gradient: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn scale_gamma(x: &Matrix) -> f64 {
    let vars = x.column_variances();
    let mean = vars.iter().sum::<f64>() / vars.len().max(1) as f64;
    if mean > 0.0 {
        1.0 / (x.cols() as f64 * mean)
    } else {
        1.0
    }
}

struct KernelCache<'a> {
    x: &'a Matrix,
    gamma: f64,
    capacity: usize,
    rows: HashMap<usize, (u64, Rc<[f64]>)>,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a Matrix, gamma: f64, cache_mb: usize) -> Self {
        let row_bytes = (x.rows() * 8).max(1);
        Self {
            x,
            gamma,
            capacity: (cache_mb * (1 << 20) / row_bytes).max(2),
            rows: HashMap::new(),
            clock: 0,
        }
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        let clock = self.clock;
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                let oldest = *self.rows.iter().min_by_key(|(_, (t, _))| *t).expect("cache is full").0;
                self.rows.remove(&oldest);
            }
            let xi = self.x.row(i);
            let r: Rc<[f64]> = (0..self.x.rows())
                .map(|j| (-self.gamma * squared_euclidean(xi, self.x.row(j))).exp())
                .collect();
            self.rows.insert(i, (clock, r));
        }
        let e = self.rows.get_mut(&i).expect("row present");
        e.0 = clock;
        Rc::clone(&e.1)
    }
}

/// Solves the C-SVC dual `min ½αᵀQα − Σα, 0 ≤ α ≤ C, yᵀα = 0`.
pub fn solve(x: &Matrix, labels: &[u8], gamma: f64, p: &SvcParams) -> Result<SmoSolution> {
    let n = x.rows();
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let c = p.c;
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let mut cache = KernelCache::new(x, gamma, p.cache_mb);
    let max_iter = p.max_iter.unwrap_or((100 * n).max(10_000_000));
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        // i: maximal violation among I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * g[t] > gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let ki = cache.row(i);
        // j: best second-order gain among I_low.
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * g[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let a = (2.0 - 2.0 * ki[t]).max(TAU);
                let obj = -b * b / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax - gmin < p.tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;
        let kj = cache.row(j);
        let (ai, aj) = (alpha[i], alpha[j]);
        let quad = (2.0 - 2.0 * ki[j]).max(TAU);
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            let (mut ni, mut nj) = (ai + delta, aj + delta);
            if diff > 0.0 && nj < 0.0 {
                nj = 0.0;
                ni = diff;
            } else if diff <= 0.0 && ni < 0.0 {
                ni = 0.0;
                nj = -diff;
            }
            if diff > 0.0 && ni > c {
                ni = c;
                nj = c - diff;
            } else if diff <= 0.0 && nj > c {
                nj = c;
                ni = c + diff;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            let (mut ni, mut nj) = (ai - delta, aj + delta);
            if sum > c && ni > c {
                ni = c;
                nj = sum - c;
            } else if sum <= c && nj < 0.0 {
                nj = 0.0;
                ni = sum;
            }
            if sum > c && nj > c {
                nj = c;
                ni = sum - c;
            } else if sum <= c && ni < 0.0 {
                ni = 0.0;
                nj = sum;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            g[t] += y[t] * (y[i] * di * ki[t] + y[j] * dj * kj[t]);
        }
    }
    if !converged {
        log::warn!("SVC: SMO stopped after {iterations} iterations without reaching tol {}", p.tol);
    }
    let rho = compute_rho(&alpha, &g, &y, c);
    Ok(SmoSolution {
        alpha,
        gradient: g,
        y,
        rho,
        iterations,
        converged,
    })
}

fn compute_rho(alpha: &[f64], g: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

impl Svc {
    pub fn fit(x: &Matrix, y: &[u8], p: &SvcParams) -> Result<Self> {
        if !(p.c > 0.0) {
            return Err(Error::Parameter("SVC C must be positive".into()));
        }
        let gamma = p.gamma.unwrap_or_else(|| scale_gamma(x));
        let sol = solve(x, y, gamma, p)?;
        let sv: Vec<usize> = (0..x.rows()).filter(|&i| sol.alpha[i] > 0.0).collect();
        Ok(Self {
            gamma,
            support: x.select_rows(&sv),
            dual_coef: sv.iter().map(|&i| sol.alpha[i] * sol.y[i]).collect(),
            rho: sol.rho,
            iterations: sol.iterations,
            converged: sol.converged,
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut f = -self.rho;
        for (k, coef) in self.dual_coef.iter().enumerate() {
            f += coef * (-self.gamma * squared_euclidean(row, self.support.row(k))).exp();
        }
        f
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }
}
