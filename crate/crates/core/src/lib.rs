//! Probing word embeddings with attribute norms.
//!
//! Embedding rows are mapped onto rated attribute vectors by a linear map or
//! a small perceptron, evaluated with leave-one-out Spearman correlations,
//! and clustered against gold categories. A PPMI/SVD builder produces
//! count-based spaces from raw text.

pub mod builder;
pub mod cli;
pub mod clustering;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod mapping;
pub mod schema;
pub mod synth;
mod table;

pub use error::{Error, Result};
