mod common;

use std::collections::BTreeMap;

use common::{random_labels, uniform};
use precluster::enrich::{augment, augment_with, smote, Encoding};
use precluster::{Algorithm, ClusterAssignment, Error, LabelVector, Matrix, RunSeed, SensorFrame};
use proptest::prelude::*;
use rand::Rng;

fn frame(x: Matrix) -> SensorFrame {
    let names = (0..x.cols()).map(|j| format!("f{j}")).collect();
    SensorFrame::new((0..x.rows() as i64).collect(), names, x).unwrap()
}

fn assignment(alg: Algorithm, labels: Vec<i32>) -> ClusterAssignment {
    ClusterAssignment::new(alg, labels, BTreeMap::new()).unwrap()
}

#[test]
fn two_labels_give_two_columns() {
    let f = frame(uniform(4, 2, 1.0, 0));
    let e = augment(&f, &[assignment(Algorithm::KMeans, vec![0, 1, 1, 0])]).unwrap();
    assert_eq!(e.added_columns(), 2);
    for row in e.frame.values().iter_rows() {
        assert_eq!(row[2] + row[3], 1.0);
    }
    assert_eq!(e.provenance, vec![(Algorithm::KMeans, vec!["kmeans_c0".to_string(), "kmeans_c1".to_string()])]);
}

#[test]
fn noise_gets_its_own_column() {
    let f = frame(uniform(3, 1, 1.0, 0));
    let e = augment(&f, &[assignment(Algorithm::Dbscan, vec![-1, 0, 0])]).unwrap();
    let names = &e.frame.feature_names()[1..];
    assert!(names[0].ends_with("_noise") && names[1].ends_with("_c0"), "{names:?}");
    assert_eq!(e.frame.values().column(1), vec![1.0, 0.0, 0.0]);
}

#[test]
fn four_algorithms_add_twenty_columns() {
    let n = 60;
    let f = frame(uniform(n, 3, 1.0, 2));
    let sizes = [(Algorithm::KMeans, 6), (Algorithm::Hdbscan, 6), (Algorithm::Gmm, 3), (Algorithm::MsAms, 5)];
    let assignments: Vec<ClusterAssignment> = sizes.iter().map(|&(a, k)| assignment(a, (0..n as i32).map(|i| i % k).collect())).collect();
    let e = augment(&f, &assignments).unwrap();
    assert_eq!(e.added_columns(), 20);
    let from_provenance: usize = e.provenance.iter().map(|(_, c)| c.len()).sum();
    assert_eq!(from_provenance, 20);
    // A noise label in one of them adds exactly one more column.
    let mut with_noise = assignments.clone();
    let mut labels = with_noise[2].labels().to_vec();
    labels[5] = -1;
    with_noise[2] = assignment(Algorithm::Gmm, labels);
    assert_eq!(augment(&f, &with_noise).unwrap().added_columns(), 21);
}

#[test]
fn raw_encoding_and_errors() {
    let f = frame(uniform(3, 1, 1.0, 0));
    let a = assignment(Algorithm::Optics, vec![-1, 0, 1]);
    let e = augment_with(&f, &[a.clone()], Encoding::Raw).unwrap();
    assert_eq!(e.frame.values().column(1), vec![-1.0, 0.0, 1.0]);
    assert!(augment(&f, &[a.clone(), a]).is_err());
    let short = assignment(Algorithm::Birch, vec![0, 1]);
    assert!(matches!(augment(&f, &[short]), Err(Error::Dimension { .. })));
}

#[test]
fn smote_on_a_diagonal_segment() {
    let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [5.0, 2.0], [6.0, 3.0], [7.0, 1.0], [5.5, 2.5]]).unwrap();
    let y = LabelVector::new(vec![0, 0, 1, 1, 1, 1]).unwrap();
    let (xb, yb) = smote(&x, &y, 1, RunSeed(3)).unwrap();
    assert_eq!(yb.counts(), [4, 4]);
    for i in 6..xb.rows() {
        let r = xb.row(i);
        assert_eq!(r[0], r[1]);
        assert!((0.0..=1.0).contains(&r[0]));
    }
}

#[test]
fn smote_balanced_is_identity() {
    let x = uniform(10, 3, 1.0, 1);
    let y = LabelVector::new(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
    assert_eq!(smote(&x, &y, 5, RunSeed(0)).unwrap(), (x, y));
}

#[test]
fn smote_needs_two_minority_rows() {
    let x = uniform(5, 2, 1.0, 1);
    let y = LabelVector::new(vec![0, 1, 1, 1, 1]).unwrap();
    assert!(matches!(smote(&x, &y, 5, RunSeed(0)), Err(Error::Imbalance(_))));
}

/// Distance from `p` to the segment `a`–`b`, relative to the segment scale.
fn off_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let u = if len2 > 0.0 { ap.iter().zip(&ab).map(|(x, y)| x * y).sum::<f64>() / len2 } else { 0.0 };
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return f64::INFINITY;
    }
    ap.iter().zip(&ab).map(|(x, y)| (x - u * y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn one_hot_rows_sum_to_one_and_base_is_untouched(seed in 0u64..100_000, n in 1usize..40, algs in 1usize..4) {
        let f = frame(uniform(n, 2, 3.0, seed));
        let assignments: Vec<ClusterAssignment> = Algorithm::COMPARED[..algs]
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let labels: Vec<i32> = random_labels(n, 4, seed + i as u64).into_iter().map(|l| l - 1).collect();
                assignment(a, labels)
            })
            .collect();
        let e = augment(&f, &assignments).unwrap();
        prop_assert_eq!(e.n_base, 2);
        for (i, row) in e.frame.values().iter_rows().enumerate() {
            prop_assert_eq!(row[0].to_bits(), f.values().get(i, 0).to_bits());
            prop_assert_eq!(row[1].to_bits(), f.values().get(i, 1).to_bits());
            let mut col = 2;
            for (_, cols) in &e.provenance {
                let s: f64 = row[col..col + cols.len()].iter().sum();
                prop_assert_eq!(s, 1.0);
                col += cols.len();
            }
            prop_assert_eq!(col, row.len());
        }
    }

    #[test]
    fn smote_points_lie_between_minority_points(seed in 0u64..100_000, n in 6usize..60, k in 1usize..6) {
        let mut rng = RunSeed(seed).rng_for("test.imb", 0);
        let x = uniform(n, 3, 10.0, seed);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.75))).collect();
        labels[0] = 0;
        labels[1] = 0;
        labels[2] = 1;
        let y = LabelVector::new(labels.clone()).unwrap();
        let [a, b] = y.counts();
        let minority_label = u8::from(b < a);
        let (xb, yb) = smote(&x, &y, k, RunSeed(seed)).unwrap();
        prop_assert_eq!(yb.counts()[0], yb.counts()[1]);
        prop_assert_eq!(xb.rows(), 2 * a.max(b));
        prop_assert_eq!(&yb.as_slice()[..n], &labels[..]);
        for i in 0..n {
            prop_assert_eq!(xb.row(i), x.row(i));
        }
        if a != b {
            let minority: Vec<usize> = (0..n).filter(|&i| labels[i] == minority_label).collect();
            for s in n..xb.rows() {
                prop_assert_eq!(yb.as_slice()[s], minority_label);
                let best = minority
                    .iter()
                    .flat_map(|&p| minority.iter().filter(move |&&q| q != p).map(move |&q| (p, q)))
                    .map(|(p, q)| off_segment(xb.row(s), x.row(p), x.row(q)))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(best < 1e-9, "synthetic row {} off every segment by {}", s, best);
            }
        }
        prop_assert_eq!(smote(&x, &y, k, RunSeed(seed)).unwrap(), (xb, yb));
    }
}
