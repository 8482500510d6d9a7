#![allow(dead_code)]

use std::collections::HashMap;

use precluster::{Matrix, RunSeed};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Gaussian blobs around `centers`, `n_per` points each, row-interleaved by blob.
pub fn blobs(centers: &[Vec<f64>], n_per: usize, sigma: f64, seed: u64) -> (Matrix, Vec<i32>) {
    let mut rng = RunSeed(seed).rng_for("test.blobs", 0);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (c, centre) in centers.iter().enumerate() {
        for _ in 0..n_per {
            rows.push(centre.iter().map(|m| m + normal.sample(&mut rng)).collect::<Vec<f64>>());
            truth.push(c as i32);
        }
    }
    (Matrix::from_rows(&rows).unwrap(), truth)
}

pub fn uniform(n: usize, d: usize, scale: f64, seed: u64) -> Matrix {
    let mut rng = RunSeed(seed).rng_for("test.uniform", 0);
    let data = (0..n * d).map(|_| rng.random::<f64>() * scale).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

pub fn random_labels(n: usize, k: i32, seed: u64) -> Vec<i32> {
    let mut rng = RunSeed(seed).rng_for("test.labels", 0);
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// True when the two labelings are equal up to a bijective renaming; noise
/// (−1) must match exactly.
pub fn same_partition(a: &[i32], b: &[i32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x < 0) != (y < 0) {
            return false;
        }
        if x < 0 {
            continue;
        }
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
