use super::cooccur::CooccurrenceCounts;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Positive pointwise mutual information,
/// `max(0, log(P(x,y) / (P(x) P(y))))`, with probabilities taken from the
/// counts and their row and column marginals. Zero counts stay zero and are
/// not stored.
pub fn ppmi(counts: &CooccurrenceCounts) -> Result<CsrMatrix<f64>> {
    if counts.total == 0 {
        return Err(Error::Degenerate("co-occurrence counts are all zero".into()));
    }
    let m = &counts.counts;
    let mut row_sums = vec![0u64; m.nrows()];
    let mut col_sums = vec![0u64; m.ncols()];
    for (i, row_sum) in row_sums.iter_mut().enumerate() {
        for (j, c) in m.row(i) {
            *row_sum += c;
            col_sums[j] += c;
        }
    }
    let total = counts.total as f64;
    let weighted = m.map(|i, j, c| {
        if c == 0 {
            return 0.0;
        }
        let ratio = (c as f64 * total) / (row_sums[i] as f64 * col_sums[j] as f64);
        ratio.ln().max(0.0)
    });
    Ok(weighted.pruned())
}
