use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// A corpus that can be streamed document by document, possibly several
/// times. Documents are blocks of lines separated by blank lines; tokens are
/// whitespace-separated.
pub trait Corpus {
    fn for_each_document(&self, f: &mut dyn FnMut(&[&str])) -> Result<()>;
}

/// An in-memory corpus.
#[derive(Debug, Clone, Copy)]
pub struct TextCorpus<'a>(pub &'a str);

/// A corpus file read from disk on every pass.
#[derive(Debug, Clone)]
pub struct FileCorpus(pub PathBuf);

fn stream_documents<R: BufRead>(reader: R, f: &mut dyn FnMut(&[&str]), origin: &std::path::Path) -> Result<()> {
    let mut buffer = String::new();
    let flush = |buffer: &mut String, f: &mut dyn FnMut(&[&str])| {
        let tokens: Vec<&str> = buffer.split_whitespace().collect();
        if !tokens.is_empty() {
            f(&tokens);
        }
        buffer.clear();
    };
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            flush(&mut buffer, f);
        } else {
            buffer.push_str(&line);
            buffer.push('\n');
        }
    }
    flush(&mut buffer, f);
    Ok(())
}

impl Corpus for TextCorpus<'_> {
    fn for_each_document(&self, f: &mut dyn FnMut(&[&str])) -> Result<()> {
        stream_documents(self.0.as_bytes(), f, std::path::Path::new("<text>"))
    }
}

impl Corpus for FileCorpus {
    fn for_each_document(&self, f: &mut dyn FnMut(&[&str])) -> Result<()> {
        let file = File::open(&self.0).map_err(|e| Error::io(&self.0, e))?;
        stream_documents(BufReader::new(file), f, &self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuilderConfig {
    /// Neighbors up to this many positions away on either side.
    pub window: usize,
    pub min_count: u64,
    pub dim: usize,
    pub svd_seed: u64,
    /// Kept in the vocabulary regardless of `min_count`, provided they occur.
    pub include_words: Vec<String>,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        Self {
            window: 10,
            min_count: 50,
            dim: 300,
            svd_seed: 0,
            include_words: Vec::new(),
        }
    }
}

impl BuilderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidArgument("window must be positive".into()));
        }
        if self.min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be positive".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        Ok(())
    }
}

/// Vocabulary chosen from a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    /// Ordered by decreasing frequency, ties broken lexicographically.
    pub words: Vec<String>,
    pub frequencies: Vec<u64>,
    pub total_tokens: u64,
    pub documents: u64,
    /// Requested include-words that never occur in the corpus.
    pub absent_includes: Vec<String>,
}

pub fn build_vocabulary(corpus: &dyn Corpus, cfg: &BuilderConfig) -> Result<Vocabulary> {
    let mut freq: HashMap<String, u64> = HashMap::new();
    let mut total_tokens = 0u64;
    let mut documents = 0u64;
    corpus.for_each_document(&mut |doc| {
        documents += 1;
        total_tokens += doc.len() as u64;
        for t in doc {
            match freq.get_mut(*t) {
                Some(c) => *c += 1,
                None => {
                    freq.insert((*t).to_owned(), 1);
                }
            }
        }
    })?;
    let mut absent_includes = Vec::new();
    let mut kept: Vec<(&String, u64)> = freq
        .iter()
        .filter(|(w, &c)| c >= cfg.min_count || (c > 0 && cfg.include_words.contains(w)))
        .map(|(w, &c)| (w, c))
        .collect();
    for w in &cfg.include_words {
        if !freq.contains_key(w) && !absent_includes.contains(w) {
            absent_includes.push(w.clone());
        }
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if kept.is_empty() {
        return Err(Error::Degenerate(format!(
            "empty vocabulary: no word occurs at least {} times in {total_tokens} tokens",
            cfg.min_count
        )));
    }
    Ok(Vocabulary {
        words: kept.iter().map(|(w, _)| (*w).clone()).collect(),
        frequencies: kept.iter().map(|(_, c)| *c).collect(),
        total_tokens,
        documents,
        absent_includes,
    })
}

/// Symmetric windowed co-occurrence counts over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceCounts {
    pub vocab: Vec<String>,
    pub counts: CsrMatrix<u64>,
    pub total: u64,
    pub window: usize,
}

impl CooccurrenceCounts {
    pub fn get(&self, a: &str, b: &str) -> u64 {
        let pos = |w: &str| self.vocab.iter().position(|v| v == w);
        match (pos(a), pos(b)) {
            (Some(i), Some(j)) => self.counts.get(i, j).unwrap_or(0),
            _ => 0,
        }
    }
}

/// Counts, for every token position, each in-vocabulary token within
/// `window` positions on either side of it in the same document. Tokens
/// outside the vocabulary still occupy positions.
pub fn count_with_vocabulary(corpus: &dyn Corpus, vocab: &[String], window: usize) -> Result<CooccurrenceCounts> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    let ids: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, w)| (w.as_str(), i as u32)).collect();
    let mut pairs: HashMap<(u32, u32), u64> = HashMap::new();
    let mut mapped: Vec<Option<u32>> = Vec::new();
    corpus.for_each_document(&mut |doc| {
        mapped.clear();
        mapped.extend(doc.iter().map(|t| ids.get(t).copied()));
        for (i, a) in mapped.iter().enumerate() {
            let Some(a) = *a else { continue };
            let end = (i + window).min(mapped.len() - 1);
            for b in mapped[i + 1..=end].iter().flatten() {
                *pairs.entry((a, *b)).or_default() += 1;
                *pairs.entry((*b, a)).or_default() += 1;
            }
        }
    })?;
    let total = pairs.values().sum();
    let triplets = pairs.into_iter().map(|((a, b), c)| (a, b, c)).collect();
    Ok(CooccurrenceCounts {
        vocab: vocab.to_vec(),
        counts: CsrMatrix::from_triplets(vocab.len(), vocab.len(), triplets),
        total,
        window,
    })
}

/// Thresholded vocabulary followed by windowed counting.
pub fn count_cooccurrence(corpus: &dyn Corpus, cfg: &BuilderConfig) -> Result<(Vocabulary, CooccurrenceCounts)> {
    cfg.validate()?;
    let vocab = build_vocabulary(corpus, cfg)?;
    let counts = count_with_vocabulary(corpus, &vocab.words, cfg.window)?;
    Ok((vocab, counts))
}
