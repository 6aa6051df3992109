use nalgebra::{DMatrix, RowDVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::AlignedData;
use crate::error::{Error, Result};
use crate::mapping::{self, Method, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvOptions {
    pub method: Method,
    pub train: TrainConfig,
    /// z-score input columns using the training rows of each fold.
    pub standardize_inputs: bool,
    /// z-score target columns on each fold's training rows and map
    /// predictions back to the original scale.
    pub normalize_targets: bool,
    /// Run folds on the rayon pool. Output is identical either way.
    pub parallel: bool,
}

impl LoocvOptions {
    pub fn new(method: Method, train: TrainConfig) -> Self {
        Self {
            method,
            train,
            standardize_inputs: false,
            normalize_targets: false,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldDiagnostic {
    pub index: usize,
    pub seed: u64,
    /// Training loss of the fold's returned model.
    pub final_loss: Option<f64>,
    pub epochs: usize,
    /// Squared error of the held-out prediction, averaged over attributes.
    pub heldout_mse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LoocvResult {
    /// Estimated norm rows; rows of failed folds are NaN.
    pub estimates: DMatrix<f64>,
    pub folds: Vec<FoldDiagnostic>,
}

impl LoocvResult {
    pub fn failed_folds(&self) -> usize {
        self.folds.iter().filter(|f| f.error.is_some()).count()
    }
}

/// Per-column affine rescaling fitted on one fold's training rows.
struct ColumnScaler {
    mean: RowDVector<f64>,
    scale: RowDVector<f64>,
}

impl ColumnScaler {
    fn fit(m: &DMatrix<f64>) -> Self {
        let n = m.nrows() as f64;
        let mean = m.row_mean();
        let scale = RowDVector::from_iterator(
            m.ncols(),
            m.column_iter().zip(mean.iter()).map(|(c, mu)| {
                let var = c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            }),
        );
        Self { mean, scale }
    }

    fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for mut row in out.row_iter_mut() {
            row -= &self.mean;
            row.component_div_assign(&self.scale);
        }
        out
    }

    fn invert(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for mut row in out.row_iter_mut() {
            row.component_mul_assign(&self.scale);
            row += &self.mean;
        }
        out
    }
}

pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ fold as u64
}

fn run_fold(data: &AlignedData, i: usize, opts: &LoocvOptions) -> (Option<Vec<f64>>, FoldDiagnostic) {
    let seed = fold_seed(opts.train.seed, i);
    let cfg = TrainConfig {
        seed,
        ..opts.train.clone()
    };
    let (mut x, mut b) = data.without_row(i);
    let mut held = data.inputs.rows(i, 1).into_owned();
    if opts.standardize_inputs {
        let s = ColumnScaler::fit(&x);
        x = s.apply(&x);
        held = s.apply(&held);
    }
    let target_scaler = opts.normalize_targets.then(|| ColumnScaler::fit(&b));
    if let Some(s) = &target_scaler {
        b = s.apply(&b);
    }

    let mut diag = FoldDiagnostic {
        index: i,
        seed,
        final_loss: None,
        epochs: 0,
        heldout_mse: None,
        error: None,
    };
    let outcome = mapping::train(opts.method, &x, &b, &cfg).and_then(|trained| {
        diag.final_loss = Some(trained.final_loss());
        diag.epochs = trained.epochs_run();
        let pred = trained.model.predict(&held)?;
        Ok(match &target_scaler {
            Some(s) => s.invert(&pred),
            None => pred,
        })
    });
    match outcome {
        Ok(pred) => {
            let row: Vec<f64> = pred.iter().copied().collect();
            let truth = data.targets.row(i);
            let mse = row
                .iter()
                .zip(truth.iter())
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / row.len() as f64;
            diag.heldout_mse = Some(mse);
            (Some(row), diag)
        }
        Err(e) => {
            diag.error = Some(e.to_string());
            (None, diag)
        }
    }
}

/// Leave-one-out estimation: row `i` of the result comes from a model
/// trained on every row except `i`, seeded with `seed ^ i`.
pub fn loocv(data: &AlignedData, opts: &LoocvOptions) -> Result<LoocvResult> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "leave-one-out needs at least 2 aligned words, got {n}"
        )));
    }
    if data.inputs.nrows() != n || data.targets.nrows() != n {
        return Err(Error::shape(
            format!("{n} rows"),
            format!("{}/{} rows", data.inputs.nrows(), data.targets.nrows()),
        ));
    }
    opts.train.validate()?;

    let folds: Vec<(Option<Vec<f64>>, FoldDiagnostic)> = if opts.parallel {
        (0..n).into_par_iter().map(|i| run_fold(data, i, opts)).collect()
    } else {
        (0..n).map(|i| run_fold(data, i, opts)).collect()
    };

    let p = data.output_dim();
    let mut estimates = DMatrix::from_element(n, p, f64::NAN);
    let mut diagnostics = Vec::with_capacity(n);
    for (i, (row, diag)) in folds.into_iter().enumerate() {
        if let Some(row) = row {
            for (j, v) in row.into_iter().enumerate() {
                estimates[(i, j)] = v;
            }
        }
        diagnostics.push(diag);
    }
    Ok(LoocvResult {
        estimates,
        folds: diagnostics,
    })
}
