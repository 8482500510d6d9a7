mod common;

use common::uniform;
use precluster::preprocess::{
    anova_select, anova_two_groups, correlation_matrix, drop_invalid_rows, fit_standardizer, label_from_noc, preprocess, prune_correlated,
    PreprocessParams,
};
use precluster::{Error, LabelVector, Matrix, NocSchedule, RunSeed, SensorFrame};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("s{j}")).collect()
}

fn frame(x: Matrix) -> SensorFrame {
    let n = x.rows() as i64;
    SensorFrame::new((0..n).map(|t| t * 60).collect(), names(x.cols()), x).unwrap()
}

fn gauss(rng: &mut precluster::seed::Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_cols(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RunSeed(seed).rng_for("test.normal", 0);
    (0..d).map(|_| (0..n).map(|_| gauss(&mut rng)).collect()).collect()
}

fn from_cols(cols: &[Vec<f64>]) -> Matrix {
    let n = cols[0].len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}

#[test]
fn drop_invalid_rows_examples() {
    let f = frame(uniform(5, 3, 1.0, 0));
    assert_eq!(drop_invalid_rows(&f).unwrap(), f);
    let mut x = uniform(5, 3, 1.0, 0);
    x.set(2, 1, f64::NAN);
    let g = drop_invalid_rows(&frame(x)).unwrap();
    assert_eq!(g.n_rows(), 4);
    assert_eq!(g.timestamps(), &[0, 60, 180, 240]);
    let all = Matrix::from_vec(2, 1, vec![f64::NAN, f64::INFINITY]).unwrap();
    assert!(matches!(drop_invalid_rows(&frame(all)), Err(Error::EmptyDataset(_))));
}

#[test]
fn drop_invalid_rows_matches_row_scan() {
    for seed in 0..50 {
        let mut rng = RunSeed(seed).rng_for("test.mask", 0);
        let (n, d) = (rng.random_range(1..60), rng.random_range(1..6));
        let mut x = uniform(n, d, 1.0, seed);
        for i in 0..n {
            for j in 0..d {
                if rng.random_bool(0.05) {
                    x.set(i, j, if rng.random_bool(0.5) { f64::NAN } else { f64::NEG_INFINITY });
                }
            }
        }
        let want: Vec<i64> = (0..n).filter(|&i| x.row(i).iter().all(|v| v.is_finite())).map(|i| i as i64 * 60).collect();
        match drop_invalid_rows(&frame(x)) {
            Ok(g) => {
                assert_eq!(g.timestamps(), &want[..]);
                assert!(!g.has_missing());
            }
            Err(Error::EmptyDataset(_)) => assert!(want.is_empty()),
            Err(e) => panic!("{e}"),
        }
    }
}

/// Two-pass sample covariance, then r = cov / (sd·sd).
fn covariance_r(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0);
    let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (n - 1.0);
    cov / (va.sqrt() * vb.sqrt())
}

#[test]
fn correlation_matches_covariance_formula() {
    for seed in 0..20 {
        let cols = normal_cols(40, 5, seed);
        let mut mixed = cols.clone();
        mixed[3] = cols[3].iter().zip(&cols[0]).map(|(a, b)| a + 0.7 * b).collect();
        let r = correlation_matrix(&frame(from_cols(&mixed))).unwrap();
        for i in 0..5 {
            assert_eq!(r.get(i, i), 1.0);
            for j in 0..5 {
                assert_eq!(r.get(i, j), r.get(j, i));
                if i != j {
                    assert!((r.get(i, j) - covariance_r(&mixed[i], &mixed[j])).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn correlation_examples() {
    let x: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
    let r = correlation_matrix(&frame(from_cols(&[x.clone(), y, vec![4.0; 10]]))).unwrap();
    assert!((r.get(0, 1) - 1.0).abs() < 1e-15);
    assert_eq!((r.get(0, 2), r.get(1, 2)), (0.0, 0.0));
    assert!(matches!(correlation_matrix(&frame(from_cols(&[vec![1.0]]))), Err(Error::InsufficientData(_))));
}

#[test]
fn planted_duplicate_is_dropped_later_copy() {
    let mut cols = normal_cols(100, 4, 3);
    cols.insert(3, cols[1].clone());
    let (kept, partners) = prune_correlated(&frame(from_cols(&cols)), 0.8).unwrap();
    assert_eq!(partners, vec![None, None, None, Some(1), None]);
    assert_eq!(kept.feature_names(), &["s0", "s1", "s2", "s4"]);

    let independent = normal_cols(200, 4, 4);
    let (kept, partners) = prune_correlated(&frame(from_cols(&independent)), 0.8).unwrap();
    assert!(partners.iter().all(Option::is_none));
    assert_eq!(kept.n_features(), 4);
}

#[test]
fn pruned_survivors_are_pairwise_below_threshold() {
    for seed in 0..30 {
        // Eight columns built from three latent factors plus varying noise.
        let latent = normal_cols(80, 3, seed);
        let noise = normal_cols(80, 8, seed + 1000);
        let mut rng = RunSeed(seed).rng_for("test.mix", 0);
        let cols: Vec<Vec<f64>> = (0..8)
            .map(|j| {
                let f = rng.random_range(0..3);
                let s: f64 = rng.random_range(0.05..1.5);
                (0..80).map(|i| latent[f][i] + s * noise[j][i]).collect()
            })
            .collect();
        let threshold = 0.8;
        let (kept, partners) = prune_correlated(&frame(from_cols(&cols)), threshold).unwrap();
        let survivors: Vec<usize> = (0..8).filter(|&j| partners[j].is_none()).collect();
        assert_eq!(kept.n_features(), survivors.len());
        for (a, &i) in survivors.iter().enumerate() {
            for &j in &survivors[a + 1..] {
                assert!(covariance_r(&cols[i], &cols[j]).abs() <= threshold + 1e-12, "seed {seed}: {i},{j}");
            }
        }
        for (j, p) in partners.iter().enumerate() {
            if let Some(i) = *p {
                assert!(i < j && partners[i].is_none());
                assert!(covariance_r(&cols[i], &cols[j]).abs() > threshold);
            }
        }
    }
}

/// P(F(1, ν) > f) = P(|T| > √f) with T ~ t(ν). Under t = √ν·tan θ the t
/// density becomes ∝ cos^(ν−1) θ, integrated here by composite Simpson.
fn f1_survival_by_quadrature(f: f64, nu: f64) -> f64 {
    let simpson = |b: f64| {
        let m = 4000;
        let h = b / m as f64;
        let g = |t: f64| t.cos().powf(nu - 1.0);
        let mut s = g(0.0) + g(b);
        for k in 1..m {
            s += g(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let theta = (f / nu).sqrt().atan();
    1.0 - simpson(theta) / simpson(std::f64::consts::FRAC_PI_2)
}

#[test]
fn anova_examples() {
    let y = LabelVector::new(vec![0, 0, 0, 1, 1, 1]).unwrap();
    assert_eq!(anova_two_groups(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0], &y).unwrap(), (0.0, 1.0));
    let (f, p) = anova_two_groups(&[1.0, 2.0, 3.0, 2.0, 3.0, 4.0], &y).unwrap();
    assert!((f - 1.5).abs() < 1e-12);
    assert!((p - 0.288).abs() < 1e-3);
    assert!((p - f1_survival_by_quadrature(1.5, 4.0)).abs() < 1e-9);
    let x = from_cols(&[vec![1.0, 2.0, 3.0, 2.0, 3.0, 4.0]]);
    let (kept, report) = anova_select(&frame(x), &y, 0.05).unwrap();
    assert_eq!(kept.n_features(), 0);
    assert!(!report.entries[0].kept);
    let one = LabelVector::new(vec![1; 6]).unwrap();
    assert!(matches!(anova_two_groups(&[1.0; 6], &one), Err(Error::DegenerateLabels(_))));
}

#[test]
fn anova_p_matches_quadrature() {
    for seed in 0..200 {
        let mut rng = RunSeed(seed).rng_for("test.anova", 0);
        let n = rng.random_range(4..30);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
        labels[0] = 0;
        labels[1] = 1;
        let shift = rng.random_range(0.0..2.0);
        let v: Vec<f64> = labels
            .iter()
            .map(|&l| gauss(&mut rng) + shift * f64::from(l))
            .collect::<Vec<f64>>();
        let (f, p) = anova_two_groups(&v, &LabelVector::new(labels).unwrap()).unwrap();
        let want = f1_survival_by_quadrature(f, n as f64 - 2.0);
        assert!((p - want).abs() < 1e-6, "seed {seed}: {p} vs {want}");
    }
}

#[test]
fn shifted_channel_kept_noise_dropped() {
    let n = 400;
    let mut rng = RunSeed(11).rng_for("test.shift", 0);
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 5 != 0)).collect();
    let shifted: Vec<f64> = labels
        .iter()
        .map(|&l| gauss(&mut rng) + if l == 0 { 5.0 } else { 0.0 })
        .collect();
    let noise: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
    let (kept, report) = anova_select(&frame(from_cols(&[shifted, noise])), &LabelVector::new(labels).unwrap(), 0.05).unwrap();
    assert_eq!(kept.feature_names(), &["s0"]);
    assert!(report.entries[0].p_value < 1e-12);
    assert!(report.entries[1].p_value >= 0.05);
}

#[test]
fn standardizer_examples() {
    let x = from_cols(&[vec![1.0, 2.0, 3.0], vec![7.0, 7.0, 7.0]]);
    let f = frame(x);
    let (s, constant) = fit_standardizer(&f).unwrap();
    assert_eq!(constant, vec!["s1".to_string()]);
    assert_eq!(s.means, vec![2.0]);
    assert!((s.stddevs[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    let z = s.apply(&f).unwrap();
    let want = [-1.224744871391589, 0.0, 1.224744871391589];
    for (a, b) in z.values().column(0).iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    // Refitting on standardized data changes nothing.
    let (s2, _) = fit_standardizer(&z).unwrap();
    let z2 = s2.apply(&z).unwrap();
    for (a, b) in z2.values().as_slice().iter().zip(z.values().as_slice()) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn preprocess_keeps_stddev_positive_and_values_finite() {
    let n = 300;
    let mut cols = normal_cols(n, 3, 5);
    let t: Vec<i64> = (0..n as i64).map(|i| i * 60).collect();
    let schedule = NocSchedule::new(vec![(0, 100 * 60), (200 * 60, 300 * 60)]).unwrap();
    for i in 100..200 {
        cols[0][i] += 4.0;
        cols[2][i] -= 3.0;
    }
    cols.push(cols[0].iter().map(|v| 2.0 * v + 1.0).collect());
    let f = SensorFrame::new(t, names(4), from_cols(&cols)).unwrap();
    let out = preprocess(&f, &schedule, &PreprocessParams::default()).unwrap();
    assert_eq!(out.frame.feature_names(), &["s0", "s2"]);
    assert_eq!(out.report.get("s3").unwrap().dropped_by.as_deref(), Some("s0"));
    assert!(out.standardizer.stddevs.iter().all(|&s| s > 0.0));
    for j in 0..out.frame.n_features() {
        let c = out.frame.values().column(j);
        let m = c.iter().sum::<f64>() / n as f64;
        let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        assert!(m.abs() < 1e-10 && (v.sqrt() - 1.0).abs() < 1e-10);
    }
    for e in &out.report.entries {
        assert!(!e.kept || (e.dropped_by.is_none() && e.p_value < 0.05));
    }
}

#[test]
fn label_from_noc_examples() {
    let f = frame(uniform(10, 1, 1.0, 0));
    assert_eq!(label_from_noc(&f, &NocSchedule::empty()).as_slice(), &[0; 10]);
    let full = NocSchedule::new(vec![(-5, 10_000)]).unwrap();
    assert_eq!(label_from_noc(&f, &full).as_slice(), &[1; 10]);
}

proptest! {
    #[test]
    fn label_from_noc_matches_linear_scan(seed in 0u64..100_000, k in 0usize..6) {
        let mut rng = RunSeed(seed).rng_for("test.noc", 0);
        let mut intervals: Vec<(i64, i64)> = (0..k)
            .map(|_| {
                let s = rng.random_range(-100..1300);
                (s, s + rng.random_range(1..400))
            })
            .collect();
        let f = frame(uniform(20, 1, 1.0, seed));
        let got = label_from_noc(&f, &NocSchedule::new(intervals.clone()).unwrap());
        let want: Vec<u8> = f
            .timestamps()
            .iter()
            .map(|&t| u8::from(intervals.iter().any(|&(s, e)| s <= t && t < e)))
            .collect();
        prop_assert_eq!(got.as_slice(), &want[..]);
        intervals.reverse();
        prop_assert_eq!(label_from_noc(&f, &NocSchedule::new(intervals).unwrap()), got);
    }

    #[test]
    fn standardization_is_invertible(seed in 0u64..100_000, n in 2usize..50, d in 1usize..5) {
        let f = frame(uniform(n, d, 50.0, seed));
        let (s, constant) = fit_standardizer(&f).unwrap();
        prop_assert!(constant.is_empty());
        let back = s.inverse(&s.apply(&f).unwrap()).unwrap();
        for (a, b) in back.values().as_slice().iter().zip(f.values().as_slice()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
