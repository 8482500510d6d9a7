use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Timestamped observation matrix with named sensor channels.
///
/// Missing or non-finite readings are tracked in a per-cell mask rather than
/// stored as NaN; the underlying value of a masked cell is `0.0` and must not
/// be read as data.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    timestamps: Vec<i64>,
    feature_names: Vec<String>,
    values: Matrix,
    missing: Option<Vec<bool>>,
}

impl SensorFrame {
    /// Non-finite cells are moved into the missing mask.
    pub fn new(timestamps: Vec<i64>, feature_names: Vec<String>, values: Matrix) -> Result<Self> {
        let mut mask = vec![false; values.rows() * values.cols()];
        let mut values = values;
        let mut any = false;
        for i in 0..values.rows() {
            for j in 0..values.cols() {
                if !values.get(i, j).is_finite() {
                    values.set(i, j, 0.0);
                    mask[i * values.cols() + j] = true;
                    any = true;
                }
            }
        }
        Self::with_mask(timestamps, feature_names, values, any.then_some(mask))
    }

    pub fn with_mask(
        timestamps: Vec<i64>,
        feature_names: Vec<String>,
        values: Matrix,
        missing: Option<Vec<bool>>,
    ) -> Result<Self> {
        if timestamps.len() != values.rows() {
            return Err(Error::Dimension {
                expected: values.rows(),
                actual: timestamps.len(),
            });
        }
        if feature_names.len() != values.cols() {
            return Err(Error::Dimension {
                expected: values.cols(),
                actual: feature_names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Parameter(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(w) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Parameter(format!(
                "timestamps must be non-decreasing (row {} < row {})",
                w + 1,
                w
            )));
        }
        if let Some(m) = &missing {
            if m.len() != values.rows() * values.cols() {
                return Err(Error::Dimension {
                    expected: values.rows() * values.cols(),
                    actual: m.len(),
                });
            }
        }
        let missing = missing.filter(|m| m.iter().any(|&b| b));
        Ok(Self {
            timestamps,
            feature_names,
            values,
            missing,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn has_missing(&self) -> bool {
        self.missing.is_some()
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing
            .as_ref()
            .is_some_and(|m| m[row * self.values.cols() + col])
    }

    pub fn row_has_missing(&self, row: usize) -> bool {
        let d = self.values.cols();
        self.missing
            .as_ref()
            .is_some_and(|m| m[row * d..(row + 1) * d].iter().any(|&b| b))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> SensorFrame {
        let d = self.values.cols();
        let missing = self.missing.as_ref().map(|m| {
            rows.iter()
                .flat_map(|&i| m[i * d..(i + 1) * d].iter().copied())
                .collect::<Vec<bool>>()
        });
        SensorFrame {
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            feature_names: self.feature_names.clone(),
            values: self.values.select_rows(rows),
            missing: missing.filter(|m| m.iter().any(|&b| b)),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> SensorFrame {
        let d = self.values.cols();
        let missing = self.missing.as_ref().map(|m| {
            (0..self.n_rows())
                .flat_map(|i| cols.iter().map(move |&j| m[i * d + j]))
                .collect::<Vec<bool>>()
        });
        SensorFrame {
            timestamps: self.timestamps.clone(),
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            values: self.values.select_columns(cols),
            missing: missing.filter(|m| m.iter().any(|&b| b)),
        }
    }

    /// Replaces the value matrix, keeping timestamps and names.
    pub fn with_values(&self, values: Matrix) -> Result<SensorFrame> {
        SensorFrame::new(self.timestamps.clone(), self.feature_names.clone(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn non_finite_cells_become_missing() {
        let m = Matrix::from_rows(&[[1.0, f64::NAN], [2.0, 3.0]]).unwrap();
        let f = SensorFrame::new(vec![0, 1], names(2), m).unwrap();
        assert!(f.is_missing(0, 1));
        assert!(!f.is_missing(1, 1));
        assert!(f.row_has_missing(0));
        assert_eq!(f.values().get(0, 1), 0.0);
        assert!(!f.select_rows(&[1]).has_missing());
    }

    #[test]
    fn rejects_bad_shapes_and_order() {
        let m = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(SensorFrame::new(vec![0], names(1), m.clone()).is_err());
        assert!(SensorFrame::new(vec![1, 0], names(1), m.clone()).is_err());
        assert!(SensorFrame::new(vec![0, 0], vec!["a".into(), "a".into()], Matrix::zeros(2, 2)).is_err());
        assert!(SensorFrame::new(vec![0, 0], names(1), m).is_ok());
    }
}
