//! Learned mappings from embedding space to norm space.
//!
//! Two model families are trained by minimizing mean squared error with
//! AdaGrad: a bias-free linear map `B ≈ W·M` and a one-hidden-layer
//! perceptron with logistic hidden units and a linear output layer.

mod adagrad;
mod io;
mod linear;
mod mlp;

use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adagrad::AdaGradState;
pub use io::{read_model, write_model};
pub use linear::{train_linear, LinearMap};
pub use mlp::{train_mlp, MlpGradients, MlpMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    Full,
    MiniBatch(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub adagrad_epsilon: f64,
    pub batch: BatchMode,
    pub seed: u64,
    /// MLP weights are drawn from `U(-s, s)` with `s = init_scale / sqrt(fan_in)`.
    pub init_scale: f64,
    /// MLP hidden width.
    pub hidden: usize,
    /// Early stop once the relative loss change over `patience` epochs drops
    /// below this. Zero disables early stopping.
    pub tolerance: f64,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 1000,
            adagrad_epsilon: 1e-8,
            batch: BatchMode::Full,
            seed: 0,
            init_scale: 1.0,
            hidden: 150,
            tolerance: 1e-9,
            patience: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_owned()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.adagrad_epsilon > 0.0 && self.adagrad_epsilon.is_finite()) {
            return bad("adagrad_epsilon must be positive");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        if self.hidden == 0 {
            return bad("hidden width must be positive");
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad("tolerance must be nonnegative");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if self.batch == BatchMode::MiniBatch(0) {
            return bad("mini-batch size must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Linear,
    Mlp,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lt" => Ok(Self::Linear),
            "mlp" => Ok(Self::Mlp),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?} (expected linear or mlp)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Mlp => "mlp",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearMap),
    Mlp(MlpMap),
}

impl Model {
    pub fn input_dim(&self) -> usize {
        match self {
            Model::Linear(m) => m.input_dim(),
            Model::Mlp(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Model::Linear(m) => m.output_dim(),
            Model::Mlp(m) => m.output_dim(),
        }
    }

    pub fn predict(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Model::Linear(m) => m.predict(inputs),
            Model::Mlp(m) => m.predict(inputs),
        }
    }
}

/// A trained model with its per-epoch training loss.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    /// Loss of the parameters entering each epoch, followed by the loss of
    /// the returned parameters.
    pub loss_history: Vec<f64>,
}

impl<M> Trained<M> {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn epochs_run(&self) -> usize {
        self.loss_history.len().saturating_sub(1)
    }

    fn map<N>(self, f: impl FnOnce(M) -> N) -> Trained<N> {
        Trained {
            model: f(self.model),
            loss_history: self.loss_history,
        }
    }
}

pub fn train(
    method: Method,
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    cfg: &TrainConfig,
) -> Result<Trained<Model>> {
    Ok(match method {
        Method::Linear => train_linear(inputs, targets, cfg)?.map(Model::Linear),
        Method::Mlp => train_mlp(inputs, targets, cfg)?.map(Model::Mlp),
    })
}

/// Mean of squared differences over all entries.
pub fn mse_loss(pred: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            format!("{:?}", target.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("empty matrices".into()));
    }
    let sum: f64 = pred.iter().zip(target.iter()).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

fn check_training_data(inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<()> {
    if inputs.nrows() != targets.nrows() {
        return Err(Error::shape(
            format!("{} target rows", inputs.nrows()),
            format!("{} target rows", targets.nrows()),
        ));
    }
    if inputs.nrows() == 0 {
        return Err(Error::Degenerate("no training rows".into()));
    }
    if inputs.ncols() == 0 || targets.ncols() == 0 {
        return Err(Error::InvalidArgument("zero-width inputs or targets".into()));
    }
    Ok(())
}

/// Early-stopping bookkeeping shared by both trainers.
fn converged(history: &[f64], cfg: &TrainConfig) -> bool {
    let t = history.len();
    if history.last() == Some(&0.0) {
        return true;
    }
    if cfg.tolerance == 0.0 || t <= cfg.patience {
        return false;
    }
    let before = history[t - 1 - cfg.patience];
    let now = history[t - 1];
    (before - now).abs() <= cfg.tolerance * before.abs()
}

fn record_loss(history: &mut Vec<f64>, loss: f64) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Divergence {
            epoch: history.len(),
            loss,
        });
    }
    history.push(loss);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 1.0);
        assert_eq!(mse_loss(&b, &a).unwrap(), 1.0);
        let p = DMatrix::from_element(1, 1, 3.0);
        let t = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(mse_loss(&p, &t).unwrap(), 4.0);
        assert!(mse_loss(&a, &DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = [
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                adagrad_epsilon: -1.0,
                ..Default::default()
            },
            TrainConfig {
                hidden: 0,
                ..Default::default()
            },
            TrainConfig {
                init_scale: f64::NAN,
                ..Default::default()
            },
            TrainConfig {
                batch: BatchMode::MiniBatch(0),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn convergence_window() {
        let cfg = TrainConfig {
            patience: 2,
            tolerance: 1e-3,
            ..Default::default()
        };
        assert!(!converged(&[1.0, 0.5], &cfg));
        assert!(!converged(&[1.0, 0.5, 0.4], &cfg));
        assert!(converged(&[1.0, 0.5, 0.5, 0.5], &cfg));
        assert!(converged(&[1.0, 0.0], &cfg));
    }
}
