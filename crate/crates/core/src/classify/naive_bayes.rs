use crate::matrix::Matrix;

/// Gaussian naive Bayes; arrays are indexed by class label (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Per-class population variances, smoothing included.
    pub variances: [Vec<f64>; 2],
    pub epsilon: f64,
}

impl GaussianNb {
    /// `var_smoothing` is scaled by the largest feature variance of `x`.
    pub fn fit(x: &Matrix, y: &[u8], var_smoothing: f64) -> Self {
        let d = x.cols();
        let max_var = x.column_variances().into_iter().fold(0.0, f64::max);
        let epsilon = var_smoothing * max_var;
        let mut means = [vec![0.0; d], vec![0.0; d]];
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        let mut counts = [0usize; 2];
        for (i, &c) in y.iter().enumerate() {
            let c = c as usize;
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for c in 0..2 {
            means[c].iter_mut().for_each(|m| *m /= counts[c].max(1) as f64);
        }
        for (i, &c) in y.iter().enumerate() {
            let c = c as usize;
            for ((s, v), m) in variances[c].iter_mut().zip(x.row(i)).zip(&means[c]) {
                *s += (v - m) * (v - m);
            }
        }
        for c in 0..2 {
            variances[c].iter_mut().for_each(|s| *s = *s / counts[c].max(1) as f64 + epsilon);
        }
        let n = y.len() as f64;
        Self {
            priors: [counts[0] as f64 / n, counts[1] as f64 / n],
            means,
            variances,
            epsilon,
        }
    }

    pub fn joint_log_likelihood(&self, row: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for c in 0..2 {
            let mut ll = self.priors[c].ln();
            for ((v, m), s) in row.iter().zip(&self.means[c]).zip(&self.variances[c]) {
                ll -= 0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s);
            }
            out[c] = ll;
        }
        out
    }

    /// Larger joint likelihood wins; ties go to ABNORMAL.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let [a, b] = self.joint_log_likelihood(row);
        u8::from(b > a)
    }
}
