//! Reference implementations used as test oracles. They work on plain
//! row-major `Vec`s and share no code with the library.

#![allow(dead_code)]

use nalgebra::DMatrix;

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m) = (a.len(), a[0].len());
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            for j in 0..m {
                c[i][j] += x * b[l][j];
            }
        }
    }
    c
}

/// Solves `A X = B` by Gauss-Jordan elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().chain(rb).copied().collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        assert!(p.abs() > 1e-12, "singular system");
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..n + m {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Least-squares coefficients from the normal equations `XᵀX M = XᵀB`.
pub fn normal_equations(x: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let xr = rows_of(x);
    let br = rows_of(b);
    let xt = transpose(&xr);
    let m = solve(&matmul(&xt, &xr), &matmul(&xt, &br));
    DMatrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j])
}

/// Orthogonal projection of the columns of `b` onto the column space of
/// `x`, computed through the normal equations on a maximal independent
/// subset of `x`'s columns.
pub fn projection(x: &DMatrix<f64>, b: &DMatrix<f64>, independent: &[usize]) -> DMatrix<f64> {
    let sub = x.select_columns(independent.iter());
    let m = normal_equations(&sub, b);
    let p = matmul(&rows_of(&sub), &rows_of(&m));
    DMatrix::from_fn(p.len(), p[0].len(), |i, j| p[i][j])
}

/// Singular values by one-sided (Hestenes) Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let rows = rows_of(a);
    // Work on columns of the taller orientation.
    let mut cols = if a.nrows() >= a.ncols() { transpose(&rows) } else { rows };
    let k = cols.len();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha: f64 = cols[p].iter().map(|v| v * v).sum();
                let beta: f64 = cols[q].iter().map(|v| v * v).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a * b).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..cols[p].len() {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Average-tie ranks by counting: `1 + #smaller + (#equal − 1)/2`.
pub fn counting_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let smaller = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Spearman ρ as the textbook covariance ratio of counting ranks; `None`
/// when either rank vector is constant.
pub fn brute_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (counting_ranks(x), counting_ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean) * (a - mean)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean) * (b - mean)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Normalized entropy evaluated term by term over every cluster id
/// `0..k`, skipping empty cells.
pub fn direct_entropy(members: &[usize], labels: &[usize], k: usize) -> f64 {
    let g = members.len() as f64;
    if members.len() == 1 {
        return 0.0;
    }
    let mut sum = 0.0;
    for j in 0..k {
        let nij = members.iter().filter(|&&m| labels[m] == j).count() as f64;
        if nij > 0.0 {
            sum += (nij / g) * (nij / g).ln();
        }
    }
    -sum / g.ln()
}

pub fn mean_defined(values: &[Option<f64>]) -> f64 {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    defined.iter().sum::<f64>() / defined.len() as f64
}
