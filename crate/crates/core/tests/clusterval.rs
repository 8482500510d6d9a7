mod common;

use std::collections::BTreeMap;

use common::random_labels;
use precluster::clusterval::{adjusted_rand_index, nmi_with, normalized_mutual_information, period_labels, select_top, validate, NmiNorm};
use precluster::ingest::{generate_synthetic, SynthConfig};
use precluster::{Algorithm, ClusterAssignment, RunSeed};
use proptest::prelude::*;
use rand::Rng;

/// Hubert–Arabie ARI from raw pair counts over all n(n−1)/2 pairs.
fn pair_count_ari(a: &[i32], b: &[i32]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0.0 {
        return 1.0;
    }
    2.0 * (n00 * n11 - n01 * n10) / den
}

/// Plug-in MI and entropies from joint and marginal histograms.
fn histogram_nmi(a: &[i32], b: &[i32]) -> f64 {
    let n = a.len() as f64;
    let mut joint = BTreeMap::new();
    let mut pa = BTreeMap::new();
    let mut pb = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0 / n;
        *pa.entry(x).or_insert(0.0) += 1.0 / n;
        *pb.entry(y).or_insert(0.0) += 1.0 / n;
    }
    if pa.len() == 1 && pb.len() == 1 {
        return 1.0;
    }
    let h = |m: &BTreeMap<i32, f64>| -m.values().map(|p| p * p.ln()).sum::<f64>();
    let mi: f64 = joint.iter().map(|(&(x, y), &p)| p * (p / (pa[&x] * pb[&y])).ln()).sum();
    let denom = (h(&pa) + h(&pb)) / 2.0;
    if mi <= 0.0 || denom <= 0.0 {
        return 0.0;
    }
    (mi / denom).min(1.0)
}

fn random_pair(seed: u64, max_n: usize) -> (Vec<i32>, Vec<i32>) {
    let mut rng = RunSeed(seed).rng_for("test.pair", 0);
    let n = rng.random_range(2..=max_n);
    let ka = rng.random_range(1..=6);
    let kb = rng.random_range(1..=6);
    (random_labels(n, ka, seed).into_iter().map(|l| l - 1).collect(), random_labels(n, kb, seed + 1_000_000))
}

#[test]
fn ari_matches_pair_counting_oracle() {
    for seed in 0..1000 {
        let (a, b) = random_pair(seed, 50);
        let got = adjusted_rand_index(&a, &b).unwrap();
        assert!((got - pair_count_ari(&a, &b)).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn nmi_matches_histogram_oracle() {
    for seed in 0..1000 {
        let (a, b) = random_pair(seed, if seed % 2 == 0 { 12 } else { 50 });
        let got = normalized_mutual_information(&a, &b).unwrap();
        assert!((got - histogram_nmi(&a, &b)).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn hand_examples() {
    assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
    let ari = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]).unwrap();
    assert!((ari - 0.2424).abs() < 1e-4);
    // index 2, expected 1.2, max 4.5
    assert!((ari - (2.0 - 1.2) / (4.5 - 1.2)).abs() < 1e-12);
    assert_eq!(normalized_mutual_information(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
    assert_eq!(normalized_mutual_information(&[0, 1, 2, 2], &[5, 6, 7, 7]).unwrap(), 1.0);
    assert!(adjusted_rand_index(&[0, 1], &[0]).is_err());
    assert!(normalized_mutual_information(&[], &[]).is_err());
}

#[test]
fn ari_is_centred_on_zero_for_independent_labelings() {
    let mean: f64 = (0..1000)
        .map(|s| adjusted_rand_index(&random_labels(200, 4, s), &random_labels(200, 3, s + 50_000)).unwrap())
        .sum::<f64>()
        / 1000.0;
    assert!(mean.abs() < 0.02, "{mean}");
}

#[test]
fn nmi_normalisations_are_ordered() {
    for seed in 0..200 {
        let (a, b) = random_pair(seed, 40);
        let v = |n| nmi_with(&a, &b, n).unwrap();
        let (mx, ar, ge, mn) = (v(NmiNorm::Max), v(NmiNorm::Arithmetic), v(NmiNorm::Geometric), v(NmiNorm::Min));
        assert!(mx <= ar + 1e-12 && ar <= ge + 1e-12 && ge <= mn + 1e-12);
    }
}

#[test]
fn table_one_selection() {
    let ari = [0.30, 0.55, -0.02, 0.03, 0.45, 0.35];
    let nmi = [0.42, 0.64, 0.16, 0.25, 0.56, 0.36];
    let scores: Vec<_> = Algorithm::COMPARED.iter().zip(ari.iter().zip(&nmi)).map(|(&a, (&r, &m))| (a, r, m)).collect();
    assert_eq!(select_top(&scores), vec![Algorithm::KMeans, Algorithm::Hdbscan, Algorithm::Gmm, Algorithm::MsAms]);
    let flat: Vec<_> = Algorithm::COMPARED.iter().map(|&a| (a, 0.5, 0.5)).collect();
    assert_eq!(select_top(&flat), Algorithm::COMPARED[..3].to_vec());
    assert_eq!(select_top(&[(Algorithm::Optics, -0.3, 0.0)]), vec![Algorithm::Optics]);
}

#[test]
fn default_synthetic_has_seven_periods() {
    let (frame, noc) = generate_synthetic(&SynthConfig::default(), RunSeed(1)).unwrap();
    let p = period_labels(&frame, &noc);
    assert_eq!(*p.iter().max().unwrap(), 6);
    assert!(p.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
}

#[test]
fn validate_ranks_and_selects() {
    let periods: Vec<i32> = (0..60).map(|i| i / 20).collect();
    let binary: Vec<i32> = periods.iter().map(|&p| i32::from(p != 1)).collect();
    let assignments: Vec<ClusterAssignment> = Algorithm::COMPARED
        .iter()
        .enumerate()
        .map(|(k, &alg)| {
            let labels: Vec<i32> = (0..60).map(|i| if i % 6 < k { (i % 3) as i32 } else { (i / 20) as i32 }).collect();
            ClusterAssignment::new(alg, labels, BTreeMap::new()).unwrap()
        })
        .collect();
    let rows = validate(&assignments, &periods, &binary, NmiNorm::Arithmetic).unwrap();
    let mut ra: Vec<usize> = rows.iter().map(|r| r.rank_ari).collect();
    ra.sort();
    assert_eq!(ra, (1..=6).collect::<Vec<_>>());
    assert_eq!(rows[0].ari, 1.0);
    assert_eq!(rows[0].rank_ari, 1);
    for r in &rows {
        assert_eq!(r.selected, r.rank_ari <= 3 || r.rank_nmi <= 3);
    }
}

proptest! {
    #[test]
    fn metrics_symmetric_and_permutation_invariant(seed in 0u64..100_000, shift in 1i32..5) {
        let (a, b) = random_pair(seed, 50);
        let ari = adjusted_rand_index(&a, &b).unwrap();
        let nmi = normalized_mutual_information(&a, &b).unwrap();
        prop_assert!((ari - adjusted_rand_index(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((nmi - normalized_mutual_information(&b, &a).unwrap()).abs() < 1e-12);
        // Relabel a by a cyclic shift of its label set.
        let a2: Vec<i32> = a.iter().map(|&l| (l + 1 + shift) % 7 - 1).collect();
        prop_assert!((ari - adjusted_rand_index(&a2, &b).unwrap()).abs() < 1e-12);
        prop_assert!((nmi - normalized_mutual_information(&a2, &b).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ari));
        prop_assert!((0.0..=1.0).contains(&nmi));
        prop_assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn selection_covers_both_top_threes(ari in prop::collection::vec(-1.0f64..1.0, 6), nmi in prop::collection::vec(0.0f64..1.0, 6)) {
        let scores: Vec<_> = (0..6).map(|i| (Algorithm::COMPARED[i], ari[i], nmi[i])).collect();
        let sel = select_top(&scores);
        prop_assert!((3..=6).contains(&sel.len()));
        for metric in [1usize, 2] {
            let mut idx: Vec<usize> = (0..6).collect();
            let key = |i: usize| if metric == 1 { ari[i] } else { nmi[i] };
            idx.sort_by(|&p, &q| key(q).total_cmp(&key(p)).then(p.cmp(&q)));
            for &i in &idx[..3] {
                prop_assert!(sel.contains(&Algorithm::COMPARED[i]));
            }
        }
    }
}
