//! External validation of clusterings against NoC-derived periods.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::SensorFrame;
use crate::fsutil::fmt_f64;
use crate::labels::{Algorithm, ClusterAssignment};
use crate::schedule::NocSchedule;

/// Normalisation of mutual information by the two entropies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNorm {
    #[default]
    Arithmetic,
    Geometric,
    Min,
    Max,
}

/// Period id per row: every maximal run of rows with the same NORMAL /
/// ABNORMAL state gets the next id, in time order.
pub fn period_labels(frame: &SensorFrame, schedule: &NocSchedule) -> Vec<i32> {
    let mut out = Vec::with_capacity(frame.n_rows());
    let mut id = -1;
    let mut prev = None;
    for &t in frame.timestamps() {
        let state = schedule.contains(t);
        if prev != Some(state) {
            id += 1;
            prev = Some(state);
        }
        out.push(id);
    }
    out
}

struct Contingency {
    n: f64,
    /// Non-zero cells `(row, col, count)`, sorted by coordinates.
    cells: Vec<(usize, usize, f64)>,
    rows: Vec<f64>,
    cols: Vec<f64>,
}

fn contingency(a: &[i32], b: &[i32]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut ia = HashMap::new();
    let mut ib = HashMap::new();
    let mut cells: HashMap<(usize, usize), f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        let na = ia.len();
        let i = *ia.entry(x).or_insert(na);
        let nb = ib.len();
        let j = *ib.entry(y).or_insert(nb);
        *cells.entry((i, j)).or_default() += 1.0;
    }
    let mut rows = vec![0.0; ia.len()];
    let mut cols = vec![0.0; ib.len()];
    // Sorted so that floating-point sums do not depend on hash order.
    let mut flat: Vec<((usize, usize), f64)> = cells.into_iter().collect();
    flat.sort_unstable_by_key(|c| c.0);
    for &((i, j), v) in &flat {
        rows[i] += v;
        cols[j] += v;
    }
    Ok(Contingency {
        n: a.len() as f64,
        cells: flat.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
        rows,
        cols,
    })
}

fn comb2(v: f64) -> f64 {
    v * (v - 1.0) / 2.0
}

/// Chance-corrected pair-counting agreement. Noise (−1) is an ordinary label.
/// Returns 1 when the chance-corrected denominator vanishes (both partitions
/// trivial in the same way).
pub fn adjusted_rand_index(a: &[i32], b: &[i32]) -> Result<f64> {
    let c = contingency(a, b)?;
    if c.n < 2.0 {
        return Err(Error::InsufficientData("ARI needs at least two rows".into()));
    }
    let index: f64 = c.cells.iter().map(|&(_, _, v)| comb2(v)).sum();
    let sum_a: f64 = c.rows.iter().map(|&v| comb2(v)).sum();
    let sum_b: f64 = c.cols.iter().map(|&v| comb2(v)).sum();
    let expected = sum_a * sum_b / comb2(c.n);
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let p = v / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information (natural log) divided by the chosen mean of the two
/// entropies. Two single-cluster partitions score 1.
pub fn normalized_mutual_information(a: &[i32], b: &[i32]) -> Result<f64> {
    nmi_with(a, b, NmiNorm::Arithmetic)
}

pub fn nmi_with(a: &[i32], b: &[i32], norm: NmiNorm) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::InsufficientData("NMI needs at least one row".into()));
    }
    let c = contingency(a, b)?;
    if c.rows.len() == 1 && c.cols.len() == 1 {
        return Ok(1.0);
    }
    let (ha, hb) = (entropy(&c.rows, c.n), entropy(&c.cols, c.n));
    let mi = mutual_information(&c);
    if mi <= 0.0 {
        return Ok(0.0);
    }
    let denom = match norm {
        NmiNorm::Arithmetic => (ha + hb) / 2.0,
        NmiNorm::Geometric => (ha * hb).sqrt(),
        NmiNorm::Min => ha.min(hb),
        NmiNorm::Max => ha.max(hb),
    };
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn mutual_information(c: &Contingency) -> f64 {
    let n = c.n;
    c.cells
        .iter()
        .map(|&(i, j, v)| (v / n) * (v * n / (c.rows[i] * c.cols[j])).ln())
        .sum::<f64>()
        .max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalValidation {
    pub algorithm: Algorithm,
    pub n_clusters: usize,
    pub ari: f64,
    pub nmi: f64,
    /// Secondary scores against the binary NORMAL target.
    pub ari_binary: f64,
    pub nmi_binary: f64,
    /// 1 = best.
    pub rank_ari: usize,
    pub rank_nmi: usize,
    pub selected: bool,
}

/// Ranks by descending score; equal scores keep the fixed algorithm order.
fn ranks(scores: &[(Algorithm, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .1
            .total_cmp(&scores[i].1)
            .then(scores[i].0.tie_rank().cmp(&scores[j].0.tie_rank()))
    });
    let mut rank = vec![0; scores.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    rank
}

/// Union of the top three by ARI and the top three by NMI, returned in the
/// fixed algorithm order.
pub fn select_top(scores: &[(Algorithm, f64, f64)]) -> Vec<Algorithm> {
    let ra = ranks(&scores.iter().map(|s| (s.0, s.1)).collect::<Vec<_>>());
    let rn = ranks(&scores.iter().map(|s| (s.0, s.2)).collect::<Vec<_>>());
    let mut out: Vec<Algorithm> = (0..scores.len())
        .filter(|&i| ra[i] <= 3 || rn[i] <= 3)
        .map(|i| scores[i].0)
        .collect();
    out.sort_by_key(|a| a.tie_rank());
    out
}

/// Scores every assignment against the period ids (primary) and the binary
/// target (secondary), then ranks and selects.
pub fn validate(
    assignments: &[ClusterAssignment],
    periods: &[i32],
    binary: &[i32],
    norm: NmiNorm,
) -> Result<Vec<ExternalValidation>> {
    let mut out = Vec::with_capacity(assignments.len());
    for a in assignments {
        out.push(ExternalValidation {
            algorithm: a.algorithm,
            n_clusters: a.n_clusters(),
            ari: adjusted_rand_index(a.labels(), periods)?,
            nmi: nmi_with(a.labels(), periods, norm)?,
            ari_binary: adjusted_rand_index(a.labels(), binary)?,
            nmi_binary: nmi_with(a.labels(), binary, norm)?,
            rank_ari: 0,
            rank_nmi: 0,
            selected: false,
        });
    }
    let ra = ranks(&out.iter().map(|v| (v.algorithm, v.ari)).collect::<Vec<_>>());
    let rn = ranks(&out.iter().map(|v| (v.algorithm, v.nmi)).collect::<Vec<_>>());
    for (i, v) in out.iter_mut().enumerate() {
        v.rank_ari = ra[i];
        v.rank_nmi = rn[i];
        v.selected = ra[i] <= 3 || rn[i] <= 3;
    }
    Ok(out)
}

pub fn validation_csv(rows: &[ExternalValidation]) -> String {
    let mut out = String::from("algorithm,n_clusters,ari,nmi,rank_ari,rank_nmi,selected,ari_binary,nmi_binary\n");
    for v in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            v.algorithm,
            v.n_clusters,
            fmt_f64(v.ari),
            fmt_f64(v.nmi),
            v.rank_ari,
            v.rank_nmi,
            v.selected,
            fmt_f64(v.ari_binary),
            fmt_f64(v.nmi_binary)
        ));
    }
    out
}

/// Markdown table; top-three scores per metric carry an asterisk.
pub fn validation_markdown(rows: &[ExternalValidation]) -> String {
    let mut out = String::from("| Algorithm | Clusters | ARI | NMI | Selected |\n|---|---:|---:|---:|:---:|\n");
    for v in rows {
        let star = |r: usize| if r <= 3 { "*" } else { "" };
        out.push_str(&format!(
            "| {} | {} | {:.2}{} | {:.2}{} | {} |\n",
            v.algorithm,
            v.n_clusters,
            v.ari,
            star(v.rank_ari),
            v.nmi,
            star(v.rank_nmi),
            if v.selected { "yes" } else { "" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    #[test]
    fn ari_hand_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        let v = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]).unwrap();
        assert!((v - 0.8 / 3.3).abs() < 1e-12, "{v}");
        assert!(adjusted_rand_index(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn nmi_hand_values() {
        assert_eq!(normalized_mutual_information(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert!((normalized_mutual_information(&[0, 0, 1, 2], &[5, 5, 7, 9]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(normalized_mutual_information(&[3, 3, 3], &[1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn periods_are_run_lengths() {
        let f = SensorFrame::new((0..5).collect(), vec!["a".into()], Matrix::zeros(5, 1)).unwrap();
        assert_eq!(period_labels(&f, &NocSchedule::empty()), vec![0; 5]);
        let s = NocSchedule::new(vec![(0, 2), (4, 5)]).unwrap();
        assert_eq!(period_labels(&f, &s), vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn table_values_select_four() {
        let a = Algorithm::COMPARED;
        let ari = [0.30, 0.55, -0.02, 0.03, 0.45, 0.35];
        let nmi = [0.42, 0.64, 0.16, 0.25, 0.56, 0.36];
        let scores: Vec<_> = (0..6).map(|i| (a[i], ari[i], nmi[i])).collect();
        assert_eq!(
            select_top(&scores),
            vec![Algorithm::KMeans, Algorithm::Hdbscan, Algorithm::Gmm, Algorithm::MsAms]
        );
    }

    #[test]
    fn ties_follow_fixed_order() {
        let scores: Vec<_> = Algorithm::COMPARED.iter().map(|&a| (a, 0.5, 0.5)).collect();
        assert_eq!(select_top(&scores), Algorithm::COMPARED[..3].to_vec());
        assert_eq!(select_top(&scores[..1]), vec![Algorithm::KMeans]);
    }
}
