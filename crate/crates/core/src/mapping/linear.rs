use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_data, converged, record_loss, AdaGradState, BatchMode, TrainConfig, Trained};
use crate::error::{Error, Result};

/// `B ≈ W·M` with no bias term.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    m: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::InvalidArgument("empty mapping matrix".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mapping entry".into()));
        }
        Ok(Self { m })
    }

    /// The `d × p` mapping matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn input_dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.m.ncols()
    }

    pub fn predict(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("{} input columns", self.input_dim()),
                format!("{} input columns", inputs.ncols()),
            ));
        }
        Ok(inputs * &self.m)
    }
}

/// Full-batch objective in one of two equivalent forms. The Gram form costs
/// `O(d²p)` per epoch and wins whenever `d` is small next to `n`.
enum Objective<'a> {
    Gram {
        gram: DMatrix<f64>,
        cross: DMatrix<f64>,
        target_sq: f64,
    },
    Direct {
        inputs: &'a DMatrix<f64>,
        targets: &'a DMatrix<f64>,
    },
}

impl<'a> Objective<'a> {
    fn new(inputs: &'a DMatrix<f64>, targets: &'a DMatrix<f64>) -> Self {
        if inputs.ncols() <= 2 * inputs.nrows() {
            let xt = inputs.transpose();
            Objective::Gram {
                gram: &xt * inputs,
                cross: &xt * targets,
                target_sq: targets.norm_squared(),
            }
        } else {
            Objective::Direct { inputs, targets }
        }
    }

    /// Loss at `m` and the unscaled gradient `Xᵀ(XM − B)`.
    fn evaluate(&self, m: &DMatrix<f64>, entries: f64) -> (f64, DMatrix<f64>) {
        match self {
            Objective::Gram { gram, cross, target_sq } => {
                let gm = gram * m;
                let sse = m.dot(&gm) - 2.0 * m.dot(cross) + target_sq;
                // Cancellation can leave a tiny negative remainder; NaN must
                // pass through to the divergence check.
                let sse = if sse < 0.0 { 0.0 } else { sse };
                (sse / entries, gm - cross)
            }
            Objective::Direct { inputs, targets } => {
                let residual = *inputs * m - *targets;
                let loss = residual.norm_squared() / entries;
                (loss, inputs.tr_mul(&residual))
            }
        }
    }
}

/// Fits `M` from zero by AdaGrad on `mean((XM − B)²)`.
pub fn train_linear(inputs: &DMatrix<f64>, targets: &DMatrix<f64>, cfg: &TrainConfig) -> Result<Trained<LinearMap>> {
    cfg.validate()?;
    check_training_data(inputs, targets)?;
    let (n, d, p) = (inputs.nrows(), inputs.ncols(), targets.ncols());
    let mut m = DMatrix::<f64>::zeros(d, p);
    let mut state = AdaGradState::new(&[d * p]);
    let mut history = Vec::with_capacity(cfg.epochs + 1);

    let step = |m: &mut DMatrix<f64>, state: &mut AdaGradState, grad: &DMatrix<f64>| {
        state.update(
            &mut [m.as_mut_slice()],
            &[("M", grad.as_slice())],
            cfg.learning_rate,
            cfg.adagrad_epsilon,
        )
    };

    match cfg.batch {
        BatchMode::Full => {
            let objective = Objective::new(inputs, targets);
            let entries = (n * p) as f64;
            let scale = 2.0 / entries;
            let mut finished = false;
            for _ in 0..cfg.epochs {
                let (loss, mut grad) = objective.evaluate(&m, entries);
                record_loss(&mut history, loss)?;
                if converged(&history, cfg) {
                    finished = true;
                    break;
                }
                grad *= scale;
                step(&mut m, &mut state, &grad)?;
            }
            if !finished {
                let (loss, _) = objective.evaluate(&m, entries);
                record_loss(&mut history, loss)?;
            }
        }
        BatchMode::MiniBatch(size) => {
            let full = Objective::Direct { inputs, targets };
            let entries = (n * p) as f64;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut order: Vec<usize> = (0..n).collect();
            let mut finished = false;
            for _ in 0..cfg.epochs {
                record_loss(&mut history, full.evaluate(&m, entries).0)?;
                if converged(&history, cfg) {
                    finished = true;
                    break;
                }
                order.shuffle(&mut rng);
                for batch in order.chunks(size) {
                    let x = inputs.select_rows(batch.iter());
                    let b = targets.select_rows(batch.iter());
                    let residual = &x * &m - b;
                    let grad = x.tr_mul(&residual) * (2.0 / (batch.len() * p) as f64);
                    step(&mut m, &mut state, &grad)?;
                }
            }
            if !finished {
                record_loss(&mut history, full.evaluate(&m, entries).0)?;
            }
        }
    }

    Ok(Trained {
        model: LinearMap::new(m)?,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::mse_loss;
    use rand::RngExt;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_design_recovers_targets() {
        let b = random(65, 65, 3);
        let w = DMatrix::identity(65, 65);
        let cfg = TrainConfig {
            epochs: 3000,
            ..Default::default()
        };
        let trained = train_linear(&w, &b, &cfg).unwrap();
        let dev = (trained.model.matrix() - &b).amax();
        assert!(dev < 1e-3, "max deviation {dev}");
    }

    #[test]
    fn identity_map_predicts_input() {
        let map = LinearMap::new(DMatrix::identity(65, 65)).unwrap();
        let x = random(4, 65, 9);
        assert_eq!(map.predict(&x).unwrap(), x);
        assert!(map.predict(&random(4, 64, 9)).is_err());
    }

    #[test]
    fn doubling_relation_generalizes() {
        let w = random(200, 65, 5);
        let b = &w * 2.0;
        let cfg = TrainConfig {
            epochs: 3000,
            ..Default::default()
        };
        let map = train_linear(&w, &b, &cfg).unwrap().model;
        let fresh = random(1, 65, 77);
        let pred = map.predict(&fresh).unwrap();
        let dev = (pred - &fresh * 2.0).amax();
        assert!(dev < 1e-3, "deviation {dev}");
    }

    #[test]
    fn gram_and_direct_objectives_agree() {
        let x = random(30, 4, 1);
        let b = random(30, 3, 2);
        let m = random(4, 3, 3);
        let gram = Objective::new(&x, &b);
        assert!(matches!(gram, Objective::Gram { .. }));
        let direct = Objective::Direct {
            inputs: &x,
            targets: &b,
        };
        let (l1, g1) = gram.evaluate(&m, 90.0);
        let (l2, g2) = direct.evaluate(&m, 90.0);
        assert!((l1 - l2).abs() < 1e-12);
        assert!((g1 - g2).amax() < 1e-12);
        assert!((l2 - mse_loss(&(&x * &m), &b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn wide_inputs_use_direct_objective() {
        let x = random(3, 10, 1);
        let b = random(3, 2, 2);
        assert!(matches!(Objective::new(&x, &b), Objective::Direct { .. }));
        let trained = train_linear(&x, &b, &TrainConfig::default()).unwrap();
        assert!(trained.final_loss() < 1e-4, "{}", trained.final_loss());
    }

    #[test]
    fn mini_batch_training_fits() {
        let x = random(120, 5, 11);
        let m = random(5, 3, 12);
        let b = &x * &m;
        let cfg = TrainConfig {
            batch: BatchMode::MiniBatch(16),
            epochs: 300,
            ..Default::default()
        };
        let trained = train_linear(&x, &b, &cfg).unwrap();
        assert!(trained.final_loss() < 1e-4, "{}", trained.final_loss());
        let again = train_linear(&x, &b, &cfg).unwrap();
        assert_eq!(trained.model, again.model);
    }

    #[test]
    fn divergence_is_reported() {
        let x = DMatrix::from_element(2, 1, 1e200);
        let b = DMatrix::from_element(2, 1, 1e200);
        let err = train_linear(&x, &b, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch: 0, .. }), "{err}");
    }
}
