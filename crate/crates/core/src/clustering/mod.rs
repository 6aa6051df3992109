//! k-means clustering with k-means++ seeding, scored against gold
//! categories by normalized entropy.

mod entropy;
mod kmeans;

pub use entropy::{entropy_trials, normalized_entropy, CategoryEntropy, EntropyOptions, EntropyReport};
pub use kmeans::{kmeans, kmeanspp_seed, ClusterAssignment, DEFAULT_MAX_ITERS};
