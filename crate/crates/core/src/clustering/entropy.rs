use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, DEFAULT_MAX_ITERS};
use crate::error::{Error, Result};
use crate::table::Table;

/// Normalized entropy of one gold category over the estimated clusters:
///
/// `H(G) = -1/log|G| · Σ_j (n_j/|G|) log(n_j/|G|)`
///
/// where `n_j` counts members of `G` placed in estimated cluster `j`.
/// Zero iff all members share a cluster, one iff they are all apart.
/// A singleton category scores zero.
pub fn normalized_entropy(members: &[usize], labels: &[usize]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("gold category has no members".into()));
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &m in members {
        let label = labels
            .get(m)
            .ok_or_else(|| Error::InvalidArgument(format!("member {m} has no cluster label")))?;
        *counts.entry(*label).or_default() += 1;
    }
    let size = members.len();
    if size == 1 || counts.len() == 1 {
        return Ok(0.0);
    }
    if counts.len() == size {
        return Ok(1.0);
    }
    let total = size as f64;
    // Summing over sorted counts keeps the result independent of cluster ids.
    let mut counts: Vec<usize> = counts.into_values().collect();
    counts.sort_unstable();
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    Ok((h / total.ln()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEntropy {
    pub category: u32,
    pub size: usize,
    pub mean_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Ordered by gold category id.
    pub per_category: Vec<CategoryEntropy>,
    /// Mean over categories of their trial-averaged entropies.
    pub overall_mean: f64,
    pub trials: usize,
    pub k: usize,
    /// Lloyd objective of each trial.
    pub objectives: Vec<f64>,
}

impl EntropyReport {
    pub fn csv(&self) -> Result<String> {
        let mut t = Table::new(&["category", "gold_size", "mean_entropy", "trials"]);
        for c in &self.per_category {
            t.row([
                c.category.to_string(),
                c.size.to_string(),
                c.mean_entropy.to_string(),
                self.trials.to_string(),
            ])?;
        }
        let total: usize = self.per_category.iter().map(|c| c.size).sum();
        t.row([
            "overall".to_owned(),
            total.to_string(),
            self.overall_mean.to_string(),
            self.trials.to_string(),
        ])?;
        t.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub parallel: bool,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self {
            k: crate::schema::GOLD_CLUSTER_COUNT,
            trials: 10,
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            parallel: false,
        }
    }
}

/// Clusters `x` `trials` times (trial `t` seeded `seed ^ t`) and averages
/// each gold category's normalized entropy over the trials.
pub fn entropy_trials(x: &DMatrix<f64>, gold: &[u32], opts: &EntropyOptions) -> Result<EntropyReport> {
    if gold.len() != x.nrows() {
        return Err(Error::shape(
            format!("{} gold labels", x.nrows()),
            format!("{} gold labels", gold.len()),
        ));
    }
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut categories: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &g) in gold.iter().enumerate() {
        categories.entry(g).or_default().push(i);
    }

    let run = |t: usize| -> Result<(Vec<f64>, f64)> {
        let a = kmeans(x, opts.k, opts.seed ^ t as u64, opts.max_iters)?;
        let h = categories
            .values()
            .map(|members| normalized_entropy(members, &a.labels))
            .collect::<Result<Vec<_>>>()?;
        Ok((h, a.objective))
    };
    let results: Vec<(Vec<f64>, f64)> = if opts.parallel {
        (0..opts.trials).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..opts.trials).map(run).collect::<Result<_>>()?
    };

    let per_category: Vec<CategoryEntropy> = categories
        .iter()
        .enumerate()
        .map(|(c, (&id, members))| CategoryEntropy {
            category: id,
            size: members.len(),
            mean_entropy: results.iter().map(|(h, _)| h[c]).sum::<f64>() / opts.trials as f64,
        })
        .collect();
    let overall_mean = per_category.iter().map(|c| c.mean_entropy).sum::<f64>() / per_category.len() as f64;
    Ok(EntropyReport {
        per_category,
        overall_mean,
        trials: opts.trials,
        k: opts.k,
        objectives: results.iter().map(|(_, o)| *o).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        assert_eq!(normalized_entropy(&[0, 1, 2, 3], &[5, 5, 5, 5]).unwrap(), 0.0);
        assert_eq!(normalized_entropy(&[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(normalized_entropy(&[2], &[0, 1, 7]).unwrap(), 0.0);
    }

    #[test]
    fn even_two_way_split() {
        // log 2 / log 4
        let h = normalized_entropy(&[0, 1, 2, 3], &[0, 0, 1, 1]).unwrap();
        assert!((h - 0.5).abs() < 1e-15, "{h}");
    }

    #[test]
    fn unlabeled_member_is_an_error() {
        assert!(normalized_entropy(&[0, 4], &[0, 0]).is_err());
        assert!(normalized_entropy(&[], &[0]).is_err());
    }

    #[test]
    fn relabeling_clusters_changes_nothing() {
        let labels = [0, 1, 1, 2, 2, 2, 0];
        let swapped: Vec<usize> = labels.iter().map(|l| (l + 1) % 3).collect();
        let members = [0, 1, 2, 3, 4, 5, 6];
        assert_eq!(
            normalized_entropy(&members, &labels).unwrap(),
            normalized_entropy(&members, &swapped).unwrap()
        );
    }

    #[test]
    fn separable_categories_score_zero() {
        // Three categories, each four copies of one point.
        let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let mut rows = Vec::new();
        let mut gold = Vec::new();
        for (c, p) in centres.iter().enumerate() {
            for _ in 0..4 {
                rows.extend_from_slice(p);
                gold.push(c as u32 + 1);
            }
        }
        let x = DMatrix::from_row_slice(12, 2, &rows);
        let opts = EntropyOptions {
            k: 3,
            trials: 5,
            ..Default::default()
        };
        let report = entropy_trials(&x, &gold, &opts).unwrap();
        assert!(report.per_category.iter().all(|c| c.mean_entropy == 0.0));
        assert_eq!(report.overall_mean, 0.0);
        let single = entropy_trials(
            &x,
            &gold,
            &EntropyOptions {
                trials: 1,
                ..opts.clone()
            },
        )
        .unwrap();
        assert_eq!(single.per_category, report.per_category);
        let csv = report.csv().unwrap();
        assert!(csv.starts_with("category,gold_size,mean_entropy,trials\n1,4,0,5\n"));
        assert!(csv.ends_with("overall,12,0,5\n"));
    }

    #[test]
    fn argument_errors() {
        let x = DMatrix::zeros(3, 1);
        let opts = EntropyOptions {
            k: 2,
            ..Default::default()
        };
        assert!(entropy_trials(&x, &[1, 1], &opts).is_err());
        assert!(entropy_trials(
            &x,
            &[1, 1, 1],
            &EntropyOptions {
                trials: 0,
                ..opts.clone()
            }
        )
        .is_err());
        assert!(entropy_trials(&x, &[1, 1, 1], &EntropyOptions { k: 4, ..opts }).is_err());
    }
}
