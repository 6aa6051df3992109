use nalgebra::DMatrix;

/// Compressed sparse rows. Column indices are strictly increasing within a
/// row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Copy + std::ops::AddAssign> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(u32, u32, T)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices: Vec<u32> = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in triplets {
            assert!((r as usize) < nrows && (c as usize) < ncols, "triplet out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
            } else {
                indptr[r as usize + 1] += 1;
                indices.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }
}

impl<T: Copy> CsrMatrix<T> {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let span = self.indptr[i]..self.indptr[i + 1];
        let cols = &self.indices[span.clone()];
        cols.binary_search(&(j as u32))
            .ok()
            .map(|k| self.values[span.start + k])
    }

    /// Same sparsity pattern, values mapped by `f(row, col, value)`.
    pub fn map<U>(&self, mut f: impl FnMut(usize, usize, T) -> U) -> CsrMatrix<U> {
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                values.push(f(i, j, v));
            }
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values,
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

impl CsrMatrix<f64> {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    triplets.push((i as u32, j as u32, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), triplets)
    }

    /// Drops stored zeros.
    pub fn pruned(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if v != 0.0 {
                    triplets.push((i as u32, j as u32, v));
                }
            }
        }
        Self::from_triplets(self.nrows, self.ncols, triplets)
    }
}

/// The products a truncated SVD needs from its input.
pub trait LinearOperator {
    fn shape(&self) -> (usize, usize);
    /// `A · x`
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `Aᵀ · x`
    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    fn dense(&self) -> DMatrix<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(x)
    }

    fn dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl LinearOperator for CsrMatrix<f64> {
    fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut out = DMatrix::zeros(self.nrows, x.ncols());
        for k in 0..x.ncols() {
            let col = x.column(k);
            for i in 0..self.nrows {
                out[(i, k)] = self.row(i).map(|(j, v)| v * col[j]).sum();
            }
        }
        out
    }

    fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.nrows);
        let mut out = DMatrix::zeros(self.ncols, x.ncols());
        for k in 0..x.ncols() {
            for i in 0..self.nrows {
                let xi = x[(i, k)];
                if xi == 0.0 {
                    continue;
                }
                for (j, v) in self.row(i) {
                    out[(j, k)] += v * xi;
                }
            }
        }
        out
    }

    fn dense(&self) -> DMatrix<f64> {
        self.to_dense()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_sorted_and_summed() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 3.0), (1, 0, 5.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), Some(4.0));
        assert_eq!(m.get(0, 0), None);
        assert_eq!(m.row(1).collect::<Vec<_>>(), vec![(0, 5.0), (2, 4.0)]);
    }

    #[test]
    fn products_match_dense() {
        let d = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0, 3.0, 4.0, 0.5, 0.0, 0.0]);
        let s = CsrMatrix::from_dense(&d);
        assert_eq!(s.to_dense(), d);
        let x = DMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let y = DMatrix::from_fn(3, 2, |i, j| (i * j) as f64 + 0.25);
        assert!((s.apply(&x) - &d * &x).amax() < 1e-14);
        assert!((s.apply_transpose(&y) - d.tr_mul(&y)).amax() < 1e-14);
    }
}
