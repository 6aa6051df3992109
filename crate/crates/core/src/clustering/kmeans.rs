use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Cluster of each row, in `0..k`.
    pub labels: Vec<usize>,
    pub k: usize,
    /// `k × m` centroids the labels were last assigned against.
    pub centroids: DMatrix<f64>,
    /// Sum of squared distances to assigned centroids.
    pub objective: f64,
    /// Objective after every assignment step, first to last.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

fn squared_distance(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    (0..x.ncols())
        .map(|t| {
            let d = x[(i, t)] - c[(j, t)];
            d * d
        })
        .sum()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the {n} points")));
    }
    Ok(())
}

/// k-means++ seeding: the first centroid is a uniformly chosen row, each
/// further one a row drawn with probability proportional to its squared
/// distance from the nearest centroid chosen so far. Rows at distance zero
/// are never drawn while a positive-distance row remains; once none does,
/// the next centroid is drawn uniformly from rows not yet picked.
pub fn kmeanspp_seed(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    check_k(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(x, i, x, chosen[0])).collect();
    // `x` doubles as the centroid matrix: centroid j is row chosen[j].
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 && total.is_finite() {
            let u = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut pick = None;
            for (i, w) in nearest.iter().enumerate() {
                acc += w;
                if *w > 0.0 && acc > u {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` a hair below `u`; take the last
            // positive-weight row.
            pick.unwrap_or_else(|| nearest.iter().rposition(|w| *w > 0.0).expect("positive total"))
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(squared_distance(x, i, x, next));
        }
    }
    Ok(x.select_rows(chosen.iter()))
}

/// Nearest centroid of each row (lowest index on ties) and the objective.
fn assign(x: &DMatrix<f64>, centroids: &DMatrix<f64>, labels: &mut [usize]) -> f64 {
    let mut objective = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for j in 0..centroids.nrows() {
            let d = squared_distance(x, i, centroids, j);
            if d < best.0 {
                best = (d, j);
            }
        }
        *label = best.1;
        objective += best.0;
    }
    objective
}

/// Centroids as member means. An empty cluster's centroid moves to the row
/// farthest from its own (updated) centroid; several empty clusters take
/// distinct rows in decreasing order of that distance.
fn update(x: &DMatrix<f64>, labels: &[usize], k: usize) -> DMatrix<f64> {
    let m = x.ncols();
    let mut centroids = DMatrix::zeros(k, m);
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for t in 0..m {
            centroids[(l, t)] += x[(i, t)];
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            for t in 0..m {
                centroids[(j, t)] /= c as f64;
            }
        }
    }
    let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
    if !empty.is_empty() {
        let mut far: Vec<(f64, usize)> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (squared_distance(x, i, &centroids, l), i))
            .collect();
        far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (&j, &(_, i)) in empty.iter().zip(&far) {
            for t in 0..m {
                centroids[(j, t)] = x[(i, t)];
            }
        }
    }
    centroids
}

/// Lloyd's algorithm from k-means++ seeds, until assignments stop changing
/// or `max_iters` update steps have run.
pub fn kmeans(x: &DMatrix<f64>, k: usize, seed: u64, max_iters: usize) -> Result<ClusterAssignment> {
    let n = x.nrows();
    check_k(n, k)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in clustering input".into()));
    }
    let mut centroids = kmeanspp_seed(x, k, seed)?;
    let mut labels = vec![0; n];
    let mut objective = assign(x, &centroids, &mut labels);
    let mut trace = vec![objective];
    let mut iterations = 0;
    let mut next = vec![0; n];
    while iterations < max_iters {
        iterations += 1;
        let updated = update(x, &labels, k);
        let obj = assign(x, &updated, &mut next);
        centroids = updated;
        trace.push(obj);
        objective = obj;
        if next == labels {
            break;
        }
        std::mem::swap(&mut labels, &mut next);
    }
    Ok(ClusterAssignment {
        labels,
        k,
        centroids,
        objective,
        objective_trace: trace,
        iterations,
    })
}
