use crate::error::{Error, Result};

/// Time intervals `[start, end)` (epoch seconds) of normal operating condition.
///
/// Always canonical: sorted, with overlapping or touching intervals merged.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NocSchedule {
    intervals: Vec<(i64, i64)>,
}

impl NocSchedule {
    pub fn new(mut intervals: Vec<(i64, i64)>) -> Result<Self> {
        if let Some(&(s, e)) = intervals.iter().find(|(s, e)| s >= e) {
            return Err(Error::Parameter(format!("interval start {s} must precede end {e}")));
        }
        intervals.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::with_capacity(intervals.len());
        for (s, e) in intervals {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    pub fn contains(&self, t: i64) -> bool {
        // First interval whose start is > t; the candidate is the one before it.
        let idx = self.intervals.partition_point(|&(s, _)| s <= t);
        idx > 0 && t < self.intervals[idx - 1].1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::RunSeed;
    use rand::Rng;

    #[test]
    fn disjoint_intervals_kept() {
        let s = NocSchedule::new(vec![(20, 30), (0, 10)]).unwrap();
        assert_eq!(s.intervals(), &[(0, 10), (20, 30)]);
        assert!(s.contains(0) && s.contains(9) && !s.contains(10) && s.contains(25) && !s.contains(30));
    }

    #[test]
    fn overlap_merged() {
        let s = NocSchedule::new(vec![(0, 10), (5, 15)]).unwrap();
        assert_eq!(s.intervals(), &[(0, 15)]);
    }

    #[test]
    fn inverted_interval_rejected() {
        assert!(NocSchedule::new(vec![(5, 5)]).is_err());
        assert!(NocSchedule::new(vec![(6, 5)]).is_err());
    }

    #[test]
    fn merged_membership_matches_bitmap() {
        let mut rng = RunSeed(77).rng();
        for _ in 0..20 {
            let raw: Vec<(i64, i64)> = (0..100)
                .map(|_| {
                    let s = rng.random_range(0..1000);
                    (s, s + rng.random_range(1..40))
                })
                .collect();
            let mut bitmap = vec![false; 1100];
            for &(s, e) in &raw {
                for t in s..e {
                    bitmap[t as usize] = true;
                }
            }
            let sched = NocSchedule::new(raw).unwrap();
            for w in sched.intervals().windows(2) {
                assert!(w[0].1 < w[1].0);
            }
            for (t, &b) in bitmap.iter().enumerate() {
                assert_eq!(sched.contains(t as i64), b, "t={t}");
            }
        }
    }
}
