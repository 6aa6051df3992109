//! Leave-one-out estimation of norm vectors and rank-correlation scoring.

mod loocv;
mod report;
mod spearman;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use loocv::{fold_seed, loocv, FoldDiagnostic, LoocvOptions, LoocvResult};
pub use report::{CorrelationReport, ProbeSummary, ReportFiles};
pub use spearman::{fractional_ranks, spearman};

fn check_same_shape(estimated: &DMatrix<f64>, original: &DMatrix<f64>) -> Result<()> {
    if estimated.shape() != original.shape() {
        return Err(Error::shape(
            format!("{:?}", original.shape()),
            format!("{:?}", estimated.shape()),
        ));
    }
    Ok(())
}

/// Spearman ρ per column (attribute). Rows of `estimated` holding any
/// non-finite value (failed folds) are left out of every column; a column
/// with fewer than two usable rows is undefined.
pub fn column_correlations(estimated: &DMatrix<f64>, original: &DMatrix<f64>) -> Result<Vec<Option<f64>>> {
    check_same_shape(estimated, original)?;
    let usable: Vec<usize> = (0..estimated.nrows())
        .filter(|&i| estimated.row(i).iter().all(|v| v.is_finite()))
        .collect();
    (0..estimated.ncols())
        .map(|j| {
            if usable.len() < 2 {
                return Ok(None);
            }
            let x: Vec<f64> = usable.iter().map(|&i| estimated[(i, j)]).collect();
            let y: Vec<f64> = usable.iter().map(|&i| original[(i, j)]).collect();
            spearman(&x, &y)
        })
        .collect()
}

/// Spearman ρ per row (word). Rows with non-finite estimates, and every row
/// when there is only one column, are undefined.
pub fn row_correlations(estimated: &DMatrix<f64>, original: &DMatrix<f64>) -> Result<Vec<Option<f64>>> {
    check_same_shape(estimated, original)?;
    (0..estimated.nrows())
        .map(|i| {
            let x: Vec<f64> = estimated.row(i).iter().copied().collect();
            if x.len() < 2 || x.iter().any(|v| !v.is_finite()) {
                return Ok(None);
            }
            let y: Vec<f64> = original.row(i).iter().copied().collect();
            spearman(&x, &y)
        })
        .collect()
}

/// Mean of the defined values in one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub group: String,
    pub mean: Option<f64>,
    pub defined: usize,
    pub excluded: usize,
}

impl GroupMean {
    pub fn of<'a>(group: impl Into<String>, values: impl IntoIterator<Item = &'a Option<f64>>) -> Self {
        let (mut sum, mut defined, mut excluded) = (0.0, 0usize, 0usize);
        for v in values {
            match v {
                Some(v) => {
                    sum += v;
                    defined += 1;
                }
                None => excluded += 1,
            }
        }
        Self {
            group: group.into(),
            mean: (defined > 0).then(|| sum / defined as f64),
            defined,
            excluded,
        }
    }

    pub fn total(&self) -> usize {
        self.defined + self.excluded
    }
}

/// Averages `values[i]` within `groups[i]`. Groups appear in order of first
/// occurrence.
pub fn aggregate<S: AsRef<str>>(values: &[Option<f64>], groups: &[S]) -> Result<Vec<GroupMean>> {
    if values.len() != groups.len() {
        return Err(Error::shape(
            format!("{} group labels", values.len()),
            format!("{} group labels", groups.len()),
        ));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut members: Vec<Vec<Option<f64>>> = Vec::new();
    for (v, g) in values.iter().zip(groups) {
        let g = g.as_ref();
        let k = match order.iter().position(|o| *o == g) {
            Some(k) => k,
            None => {
                order.push(g);
                members.push(Vec::new());
                order.len() - 1
            }
        };
        members[k].push(*v);
    }
    Ok(order
        .into_iter()
        .zip(&members)
        .map(|(g, vals)| GroupMean::of(g, vals))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_matrices_correlate_perfectly() {
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 5.0, 2.0, 2.0, 4.0, 9.0, 3.0, 1.0, 4.0]);
        assert!(column_correlations(&b, &b).unwrap().iter().all(|r| *r == Some(1.0)));
        assert!(row_correlations(&b, &b).unwrap().iter().all(|r| *r == Some(1.0)));
    }

    #[test]
    fn degenerate_columns_and_rows_are_undefined() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 7.0, 2.0, 7.0, 3.0, 7.0]);
        let est = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 3.0, 3.0, 2.0]);
        assert_eq!(column_correlations(&est, &b).unwrap(), vec![Some(1.0), None]);
        let est = DMatrix::from_row_slice(3, 2, &[4.0, 4.0, 2.0, 3.0, 3.0, 2.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 3.0, 3.0, 2.0]);
        let rows = row_correlations(&est, &b).unwrap();
        assert_eq!(rows[0], None);
        assert_eq!(rows[1], Some(1.0));
    }

    #[test]
    fn failed_rows_are_skipped() {
        let b = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let est = DMatrix::from_row_slice(4, 1, &[1.0, f64::NAN, 3.0, 4.0]);
        assert_eq!(column_correlations(&est, &b).unwrap(), vec![Some(1.0)]);
        assert_eq!(row_correlations(&est, &b).unwrap()[1], None);
        assert!(column_correlations(&est, &DMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let means = aggregate(&[Some(0.5); 4], &["a", "b", "a", "b"]).unwrap();
        assert_eq!(means.len(), 2);
        assert!(means.iter().all(|m| m.mean == Some(0.5) && m.defined == 2));

        let means = aggregate(&[Some(0.2), Some(0.4), None], &["g", "g", "g"]).unwrap();
        assert!((means[0].mean.unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(means[0].excluded, 1);

        let means = aggregate(&[None, Some(1.0)], &["x", "y"]).unwrap();
        assert_eq!(means[0].mean, None);
        assert_eq!(means[1].group, "y");

        assert!(aggregate(&[Some(1.0)], &["a", "b"]).is_err());
    }
}
