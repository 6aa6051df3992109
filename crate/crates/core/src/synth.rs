//! Seeded synthetic data with known ground truth, for fixtures and
//! self-checks.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{EmbeddingSpace, NormDataset};
use crate::error::Result;
use crate::schema;

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Inputs, targets and the generating map of a regression task.
#[derive(Debug, Clone)]
pub struct Task {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
    pub mapping: DMatrix<f64>,
}

fn add_noise(m: &mut DMatrix<f64>, sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("positive sigma");
        m.apply(|v| *v += noise.sample(rng));
    }
}

/// `B = W·M* + N(0, σ²)` with standard normal `W` and `M*`.
pub fn linear_task(n: usize, d: usize, p: usize, noise: f64, seed: u64) -> Task {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = gaussian(n, d, &mut rng);
    let mapping = gaussian(d, p, &mut rng);
    let mut targets = &inputs * &mapping;
    add_noise(&mut targets, noise, &mut rng);
    Task {
        inputs,
        targets,
        mapping,
    }
}

/// `B = (W∘W)·M* + N(0, σ²)`: targets depend on squared input features
/// only, which no linear map of `W` can express.
pub fn squared_task(n: usize, d: usize, p: usize, noise: f64, seed: u64) -> Task {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = gaussian(n, d, &mut rng);
    let mapping = gaussian(d, p, &mut rng);
    let mut targets = inputs.map(|v| v * v) * &mapping;
    add_noise(&mut targets, noise, &mut rng);
    Task {
        inputs,
        targets,
        mapping,
    }
}

/// A fixture pair over the full 65-attribute inventory: an embedding space
/// of `n + extra` words and norms for the first `n`, related by
/// `norms = embeddings · M* + noise`. Words are grouped into `clusters`
/// gold clusters and categories round-robin.
pub fn fixture(
    n: usize,
    extra: usize,
    d: usize,
    clusters: u32,
    noise: f64,
    seed: u64,
) -> Result<(EmbeddingSpace, NormDataset)> {
    let p = schema::ATTRIBUTE_COUNT;
    let task = linear_task(n + extra, d, p, noise, seed);
    let vocab: Vec<String> = (0..n + extra).map(|i| format!("word{i:03}")).collect();
    let space = EmbeddingSpace::new(vocab.clone(), task.inputs)?;
    let kinds = ["noun", "verb", "adjective"];
    let categories = (0..n).map(|i| kinds[i % kinds.len()].to_owned()).collect();
    let gold = (0..n).map(|i| (i as u32 % clusters.max(1)) + 1).collect();
    let norms = NormDataset::new(
        vocab[..n].to_vec(),
        categories,
        schema::attribute_names().into_iter().map(str::to_owned).collect(),
        schema::attribute_names()
            .into_iter()
            .map(|a| schema::domain_of(a).expect("canonical attribute").to_owned())
            .collect(),
        task.targets.rows(0, n).into_owned(),
        Some(gold),
    )?;
    Ok((space, norms))
}
