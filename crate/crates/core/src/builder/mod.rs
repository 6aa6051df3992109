//! Count-based word vectors: windowed co-occurrence counts, PPMI weighting
//! and a truncated SVD.

mod cooccur;
mod ppmi;
mod sparse;
mod svd;

use serde::{Deserialize, Serialize};

use crate::data::EmbeddingSpace;
use crate::error::{Error, Result};

pub use cooccur::{
    build_vocabulary, count_cooccurrence, count_with_vocabulary, BuilderConfig, CooccurrenceCounts, Corpus, FileCorpus,
    TextCorpus, Vocabulary,
};
pub use ppmi::ppmi;
pub use sparse::{CsrMatrix, LinearOperator};
pub use svd::{truncated_svd, SvdMethod, TruncatedSvd};

/// Everything needed to describe how a space was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub window: usize,
    pub min_count: u64,
    pub dim: usize,
    pub svd_seed: u64,
    pub svd_method: SvdMethod,
    pub vocab_size: usize,
    pub total_tokens: u64,
    pub documents: u64,
    pub cooccurrence_total: u64,
    pub ppmi_nonzeros: usize,
    pub include_words: Vec<String>,
    pub include_words_absent: Vec<String>,
    /// Leading singular values, largest first.
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BuiltSpace {
    pub space: EmbeddingSpace,
    pub metadata: BuildMetadata,
}

/// Counts, weights and factorizes a corpus into `cfg.dim`-dimensional rows
/// `U·Σ`, in vocabulary order.
pub fn build_ppmi_space(corpus: &dyn Corpus, cfg: &BuilderConfig, method: SvdMethod) -> Result<BuiltSpace> {
    let (vocab, counts) = count_cooccurrence(corpus, cfg)?;
    if cfg.dim > vocab.words.len() {
        return Err(Error::InvalidArgument(format!(
            "dim {} exceeds the vocabulary size {}",
            cfg.dim,
            vocab.words.len()
        )));
    }
    let weights = ppmi(&counts)?;
    let svd = truncated_svd(&weights, cfg.dim, cfg.svd_seed, method)?;
    let space = EmbeddingSpace::new(vocab.words.clone(), svd.scaled_rows())?;
    Ok(BuiltSpace {
        space,
        metadata: BuildMetadata {
            window: cfg.window,
            min_count: cfg.min_count,
            dim: cfg.dim,
            svd_seed: cfg.svd_seed,
            svd_method: method,
            vocab_size: vocab.words.len(),
            total_tokens: vocab.total_tokens,
            documents: vocab.documents,
            cooccurrence_total: counts.total,
            ppmi_nonzeros: weights.nnz(),
            include_words: cfg.include_words.clone(),
            include_words_absent: vocab.absent_includes,
            singular_values: svd.singular_values.iter().copied().collect(),
        },
    })
}
