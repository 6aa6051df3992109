use nalgebra::{DMatrix, DVector, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sparse::LinearOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvdMethod {
    /// Dense SVD of the whole matrix.
    Exact,
    /// Randomized range finder with power iterations.
    Randomized { oversample: usize, power_iters: usize },
    /// Exact for small inputs, randomized (oversample 10, 2 power
    /// iterations) otherwise.
    Auto,
}

impl SvdMethod {
    pub const DEFAULT_RANDOMIZED: SvdMethod = SvdMethod::Randomized {
        oversample: 10,
        power_iters: 2,
    };

    /// Entry count up to which `Auto` densifies and decomposes exactly.
    pub const EXACT_LIMIT: usize = 250_000;

    fn resolve(self, n: usize, m: usize, d: usize) -> SvdMethod {
        match self {
            SvdMethod::Auto => {
                let l = d + 10;
                if n * m <= Self::EXACT_LIMIT || l >= n.min(m) {
                    SvdMethod::Exact
                } else {
                    Self::DEFAULT_RANDOMIZED
                }
            }
            other => other,
        }
    }
}

/// Rank-`d` factors `A ≈ U diag(s) Vᵀ` with `s` nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// `n × d`, orthonormal columns.
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    /// `d × m`, orthonormal rows.
    pub vt: DMatrix<f64>,
}

impl TruncatedSvd {
    /// Word vectors `U_d · diag(s_d)`.
    pub fn scaled_rows(&self) -> DMatrix<f64> {
        let mut rows = self.u.clone();
        for (mut col, s) in rows.column_iter_mut().zip(self.singular_values.iter()) {
            col *= *s;
        }
        rows
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.scaled_rows() * &self.vt
    }
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Leading `d` singular triplets of `a`, deterministic given `seed`.
///
/// Signs are fixed so the largest-magnitude entry of every left singular
/// vector is positive.
pub fn truncated_svd<A: LinearOperator + ?Sized>(
    a: &A,
    d: usize,
    seed: u64,
    method: SvdMethod,
) -> Result<TruncatedSvd> {
    let (n, m) = a.shape();
    if d == 0 || d > n.min(m) {
        return Err(Error::InvalidArgument(format!(
            "rank {d} out of range for a {n}x{m} matrix"
        )));
    }
    let (mut u, s, mut vt) = match method.resolve(n, m, d) {
        SvdMethod::Exact | SvdMethod::Auto => {
            let svd = SVD::new(a.dense(), true, true);
            let u = svd.u.expect("requested U");
            let vt = svd.v_t.expect("requested Vᵀ");
            (
                u.columns(0, d).into_owned(),
                svd.singular_values.rows(0, d).into_owned(),
                vt.rows(0, d).into_owned(),
            )
        }
        SvdMethod::Randomized {
            oversample,
            power_iters,
        } => {
            let l = (d + oversample).min(n.min(m));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let omega = DMatrix::from_fn(m, l, |_, _| StandardNormal.sample(&mut rng));
            let mut q = orthonormal_basis(a.apply(&omega));
            for _ in 0..power_iters {
                let z = orthonormal_basis(a.apply_transpose(&q));
                q = orthonormal_basis(a.apply(&z));
            }
            // B = Qᵀ A, formed as (Aᵀ Q)ᵀ.
            let b = a.apply_transpose(&q).transpose();
            let svd = SVD::new(b, true, true);
            let ub = svd.u.expect("requested U");
            let vt = svd.v_t.expect("requested Vᵀ");
            (
                &q * ub.columns(0, d),
                svd.singular_values.rows(0, d).into_owned(),
                vt.rows(0, d).into_owned(),
            )
        }
    };
    for k in 0..d {
        let col = u.column(k);
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            u.column_mut(k).neg_mut();
            vt.row_mut(k).neg_mut();
        }
    }
    Ok(TruncatedSvd {
        u,
        singular_values: s,
        vt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::sparse::CsrMatrix;

    #[test]
    fn identity_is_reconstructed_exactly() {
        let eye = DMatrix::<f64>::identity(5, 5);
        let svd = truncated_svd(&eye, 5, 0, SvdMethod::Auto).unwrap();
        assert!(svd.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-14));
        assert!((svd.reconstruct() - eye).amax() < 1e-14);
    }

    #[test]
    fn rank_one_is_reconstructed() {
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let v = DVector::from_vec(vec![0.3, 1.0, -1.0]);
        let a = &u * v.transpose();
        for method in [SvdMethod::Exact, SvdMethod::DEFAULT_RANDOMIZED] {
            let svd = truncated_svd(&a, 1, 1, method).unwrap();
            assert!((svd.reconstruct() - &a).amax() < 1e-12, "{method:?}");
        }
    }

    #[test]
    fn rank_out_of_range() {
        let a = DMatrix::<f64>::zeros(3, 2);
        assert!(truncated_svd(&a, 0, 0, SvdMethod::Auto).is_err());
        assert!(truncated_svd(&a, 3, 0, SvdMethod::Auto).is_err());
    }

    #[test]
    fn sparse_and_dense_inputs_agree() {
        let a = DMatrix::from_fn(30, 20, |i, j| {
            if (i * 3 + j) % 4 == 0 {
                (i + j) as f64 * 0.1
            } else {
                0.0
            }
        });
        let s = CsrMatrix::from_dense(&a);
        let method = SvdMethod::DEFAULT_RANDOMIZED;
        let x = truncated_svd(&a, 4, 9, method).unwrap();
        let y = truncated_svd(&s, 4, 9, method).unwrap();
        assert!((x.singular_values - y.singular_values).amax() < 1e-10);
    }

    #[test]
    fn signs_are_normalized() {
        let a = DMatrix::from_fn(6, 4, |i, j| ((i * 5 + j * 7) % 9) as f64 - 4.0);
        let svd = truncated_svd(&a, 3, 0, SvdMethod::Exact).unwrap();
        for col in svd.u.column_iter() {
            assert!(col[col.iamax()] > 0.0);
        }
    }
}
