use crate::error::{Error, Result};

/// Per-parameter sums of squared gradients, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGradState {
    accum: Vec<Vec<f64>>,
}

impl AdaGradState {
    pub fn new(sizes: &[usize]) -> Self {
        Self {
            accum: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accum
    }

    /// `accum += g²; p -= lr · g / (sqrt(accum) + eps)` for every scalar.
    ///
    /// All gradients are checked before anything is modified, so a non-finite
    /// gradient leaves parameters and state untouched.
    pub fn update(
        &mut self,
        params: &mut [&mut [f64]],
        grads: &[(&'static str, &[f64])],
        lr: f64,
        eps: f64,
    ) -> Result<()> {
        if params.len() != self.accum.len() || grads.len() != self.accum.len() {
            return Err(Error::shape(
                format!("{} parameter tensors", self.accum.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for ((p, (name, g)), acc) in params.iter().zip(grads).zip(&self.accum) {
            if p.len() != acc.len() || g.len() != acc.len() {
                return Err(Error::shape(
                    format!("{name}: {} entries", acc.len()),
                    format!("{} params / {} grads", p.len(), g.len()),
                ));
            }
            if let Some(index) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { parameter: name, index });
            }
        }
        for ((p, (_, g)), acc) in params.iter_mut().zip(grads).zip(&mut self.accum) {
            for ((p, &g), a) in p.iter_mut().zip(g.iter()).zip(acc.iter_mut()) {
                if g == 0.0 {
                    continue;
                }
                *a += g * g;
                *p -= lr * g / (a.sqrt() + eps);
            }
        }
        Ok(())
    }
}
