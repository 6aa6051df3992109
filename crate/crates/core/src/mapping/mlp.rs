use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_training_data, converged, record_loss, AdaGradState, BatchMode, TrainConfig, Trained};
use crate::error::{Error, Result};

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One hidden layer of logistic units followed by a linear output layer:
/// `y = W2ᵀ σ(W1ᵀ x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpMap {
    /// `d × h`
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    /// `h × p`
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

/// Gradients of the mean squared error with respect to every MLP parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl MlpMap {
    pub fn new(w1: DMatrix<f64>, b1: DVector<f64>, w2: DMatrix<f64>, b2: DVector<f64>) -> Result<Self> {
        let h = w1.ncols();
        if h == 0 || w1.nrows() == 0 || w2.ncols() == 0 {
            return Err(Error::InvalidArgument("MLP dimensions must be positive".into()));
        }
        if b1.len() != h || w2.nrows() != h || b2.len() != w2.ncols() {
            return Err(Error::shape(
                format!("b1[{h}], W2[{h}x_], b2[{}]", w2.ncols()),
                format!("b1[{}], W2[{}x{}], b2[{}]", b1.len(), w2.nrows(), w2.ncols(), b2.len()),
            ));
        }
        let finite = w1
            .iter()
            .chain(b1.iter())
            .chain(w2.iter())
            .chain(b2.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("non-finite MLP parameter".into()));
        }
        Ok(Self { w1, b1, w2, b2 })
    }

    /// Seeded symmetric uniform initialization; biases start at zero.
    pub fn init(input_dim: usize, hidden: usize, output_dim: usize, init_scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = init_scale / (input_dim as f64).sqrt();
        let s2 = init_scale / (hidden as f64).sqrt();
        let w1 = DMatrix::from_row_iterator(
            input_dim,
            hidden,
            (0..input_dim * hidden).map(|_| rng.random_range(-s1..s1)),
        );
        let w2 = DMatrix::from_row_iterator(
            hidden,
            output_dim,
            (0..hidden * output_dim).map(|_| rng.random_range(-s2..s2)),
        );
        Self {
            w1,
            b1: DVector::zeros(hidden),
            w2,
            b2: DVector::zeros(output_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.ncols()
    }

    fn hidden_activations(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = inputs * &self.w1;
        for mut row in z.row_iter_mut() {
            row += self.b1.transpose();
        }
        z.apply(|v| *v = sigmoid(*v));
        z
    }

    fn output(&self, hidden: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = hidden * &self.w2;
        for mut row in y.row_iter_mut() {
            row += self.b2.transpose();
        }
        y
    }

    pub fn predict(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("{} input columns", self.input_dim()),
                format!("{} input columns", inputs.ncols()),
            ));
        }
        Ok(self.output(&self.hidden_activations(inputs)))
    }

    /// Mean squared error over all `n × p` entries and its gradients.
    pub fn loss_and_gradients(&self, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> (f64, MlpGradients) {
        let hidden = self.hidden_activations(inputs);
        let mut d_out = self.output(&hidden) - targets;
        let entries = d_out.len() as f64;
        let loss = d_out.norm_squared() / entries;
        d_out *= 2.0 / entries;

        let g_w2 = hidden.tr_mul(&d_out);
        let g_b2 = column_sums(&d_out);
        let mut d_hidden = &d_out * self.w2.transpose();
        d_hidden.zip_apply(&hidden, |g, a| *g *= a * (1.0 - a));
        let g_w1 = inputs.tr_mul(&d_hidden);
        let g_b1 = column_sums(&d_hidden);
        (
            loss,
            MlpGradients {
                w1: g_w1,
                b1: g_b1,
                w2: g_w2,
                b2: g_b2,
            },
        )
    }

    fn loss(&self, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> f64 {
        let residual = self.output(&self.hidden_activations(inputs)) - targets;
        residual.norm_squared() / residual.len() as f64
    }

    fn step(&mut self, grads: &MlpGradients, state: &mut AdaGradState, cfg: &TrainConfig) -> Result<()> {
        state.update(
            &mut [
                self.w1.as_mut_slice(),
                self.b1.as_mut_slice(),
                self.w2.as_mut_slice(),
                self.b2.as_mut_slice(),
            ],
            &[
                ("W1", grads.w1.as_slice()),
                ("b1", grads.b1.as_slice()),
                ("W2", grads.w2.as_slice()),
                ("b2", grads.b2.as_slice()),
            ],
            cfg.learning_rate,
            cfg.adagrad_epsilon,
        )
    }
}

/// Column sums of `m` as a vector (one entry per column).
fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

/// Trains an MLP of width `cfg.hidden` by backpropagated MSE gradients and
/// AdaGrad.
pub fn train_mlp(inputs: &DMatrix<f64>, targets: &DMatrix<f64>, cfg: &TrainConfig) -> Result<Trained<MlpMap>> {
    cfg.validate()?;
    check_training_data(inputs, targets)?;
    let (n, d, p, h) = (inputs.nrows(), inputs.ncols(), targets.ncols(), cfg.hidden);
    let mut net = MlpMap::init(d, h, p, cfg.init_scale, cfg.seed);
    let mut state = AdaGradState::new(&[d * h, h, h * p, p]);
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut finished = false;

    match cfg.batch {
        BatchMode::Full => {
            for _ in 0..cfg.epochs {
                let (loss, grads) = net.loss_and_gradients(inputs, targets);
                record_loss(&mut history, loss)?;
                if converged(&history, cfg) {
                    finished = true;
                    break;
                }
                net.step(&grads, &mut state, cfg)?;
            }
        }
        BatchMode::MiniBatch(size) => {
            // Stream distinct from the one used for initialization.
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(1);
            let mut order: Vec<usize> = (0..n).collect();
            for _ in 0..cfg.epochs {
                record_loss(&mut history, net.loss(inputs, targets))?;
                if converged(&history, cfg) {
                    finished = true;
                    break;
                }
                order.shuffle(&mut rng);
                for batch in order.chunks(size) {
                    let x = inputs.select_rows(batch.iter());
                    let b = targets.select_rows(batch.iter());
                    let (_, grads) = net.loss_and_gradients(&x, &b);
                    net.step(&grads, &mut state, cfg)?;
                }
            }
        }
    }
    if !finished {
        record_loss(&mut history, net.loss(inputs, targets))?;
    }

    Ok(Trained {
        model: net,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!((sigmoid(800.0) - 1.0).abs() < 1e-15);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_network_outputs_output_bias() {
        let b2 = DVector::from_vec(vec![0.25, -1.5, 3.0]);
        let net = MlpMap::new(
            DMatrix::zeros(4, 6),
            DVector::zeros(6),
            DMatrix::zeros(6, 3),
            b2.clone(),
        )
        .unwrap();
        let out = net.predict(&random(5, 4, 1)).unwrap();
        for row in out.row_iter() {
            assert_eq!(row.transpose(), b2);
        }
    }

    #[test]
    fn constant_target_is_learned() {
        let x = random(40, 6, 2);
        let row = [0.3, -0.7, 1.2, 0.0];
        let b = DMatrix::from_fn(40, 4, |_, j| row[j]);
        let cfg = TrainConfig {
            hidden: 10,
            epochs: 2000,
            ..Default::default()
        };
        let trained = train_mlp(&x, &b, &cfg).unwrap();
        assert!(trained.final_loss() <= 1e-4, "{}", trained.final_loss());
    }

    #[test]
    fn same_seed_same_parameters() {
        let x = random(20, 3, 4);
        let b = random(20, 2, 5);
        let cfg = TrainConfig {
            hidden: 8,
            epochs: 50,
            seed: 17,
            ..Default::default()
        };
        let a = train_mlp(&x, &b, &cfg).unwrap();
        let c = train_mlp(&x, &b, &cfg).unwrap();
        assert_eq!(a.model, c.model);
        let other = train_mlp(&x, &b, &TrainConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(a.model, other.model);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(MlpMap::new(
            DMatrix::zeros(2, 3),
            DVector::zeros(2),
            DMatrix::zeros(3, 1),
            DVector::zeros(1)
        )
        .is_err());
        let net = MlpMap::init(3, 4, 2, 1.0, 0);
        assert!(net.predict(&DMatrix::zeros(1, 2)).is_err());
        assert!(train_mlp(&DMatrix::zeros(3, 2), &DMatrix::zeros(2, 1), &TrainConfig::default()).is_err());
    }

    #[test]
    fn mini_batch_training_reduces_loss() {
        let x = random(64, 3, 8);
        let b = x.map(|v| v * v);
        let cfg = TrainConfig {
            hidden: 12,
            epochs: 100,
            batch: BatchMode::MiniBatch(8),
            ..Default::default()
        };
        let trained = train_mlp(&x, &b, &cfg).unwrap();
        assert!(trained.final_loss() < trained.loss_history[0]);
    }
}
