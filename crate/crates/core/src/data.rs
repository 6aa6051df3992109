//! Embedding spaces, attribute-norm datasets and their row alignment.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema;

/// Domain assigned to attributes when no domain map is available.
pub const UNASSIGNED_DOMAIN: &str = "unassigned";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    /// First line is `<count> <dim>`.
    HeaderedText,
    PlainText,
    /// Headered if the first line consists of exactly two integers.
    Auto,
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "headered" | "headered-text" => Ok(Self::HeaderedText),
            "plain" | "plain-text" => Ok(Self::PlainText),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidArgument(format!(
                "unknown embedding format {other:?} (expected headered, plain or auto)"
            ))),
        }
    }
}

impl std::fmt::Display for EmbeddingFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::HeaderedText => "headered",
            Self::PlainText => "plain",
            Self::Auto => "auto",
        })
    }
}

/// A vocabulary-indexed matrix of word vectors, one row per word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    vectors: DMatrix<f64>,
}

impl EmbeddingSpace {
    pub fn new(vocab: Vec<String>, vectors: DMatrix<f64>) -> Result<Self> {
        if vocab.is_empty() || vectors.ncols() == 0 {
            return Err(Error::Degenerate(
                "embedding space has no words or no dimensions".into(),
            ));
        }
        if vocab.len() != vectors.nrows() {
            return Err(Error::shape(
                format!("{} rows", vocab.len()),
                format!("{} rows", vectors.nrows()),
            ));
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            let row = pos % vectors.nrows();
            return Err(Error::InvalidArgument(format!(
                "non-finite component in vector of {:?}",
                vocab[row]
            )));
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, word) in vocab.iter().enumerate() {
            if let Some(first) = index.insert(word.clone(), i) {
                return Err(Error::DuplicateWord {
                    word: word.clone(),
                    first: first + 1,
                    second: i + 1,
                });
            }
        }
        Ok(Self { vocab, index, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<Vec<f64>> {
        self.index_of(word)
            .map(|i| self.vectors.row(i).iter().copied().collect())
    }

    /// Parses the whitespace-separated text format. `origin` is only used in
    /// error messages.
    pub fn read_from<R: BufRead>(reader: R, format: EmbeddingFormat, origin: &Path) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let mut header: Option<(usize, usize)> = None;
        let mut pending: Option<(usize, String)> = None;

        // Locate the first non-blank line and decide whether it is a header.
        for (no, line) in lines.by_ref() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = parse_header(&line);
            match format {
                EmbeddingFormat::HeaderedText => {
                    header = Some(
                        parsed.ok_or_else(|| Error::parse(origin, no + 1, "expected header line \"<count> <dim>\""))?,
                    );
                }
                EmbeddingFormat::Auto if parsed.is_some() => header = parsed,
                _ => pending = Some((no, line)),
            }
            break;
        }

        let mut vocab = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut dim = header.map(|(_, d)| d);
        let mut seen: HashMap<String, usize> = HashMap::new();

        let mut handle = |no: usize, line: &str| -> Result<()> {
            if line.trim().is_empty() {
                return Ok(());
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-blank line has a field");
            let start = values.len();
            for field in fields {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::parse(origin, no + 1, format!("non-numeric component {field:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(origin, no + 1, format!("non-finite component {field:?}")));
                }
                values.push(v);
            }
            let got = values.len() - start;
            match dim {
                Some(d) if d != got => {
                    return Err(Error::parse(
                        origin,
                        no + 1,
                        format!("dimension mismatch: expected {d} components, found {got}"),
                    ))
                }
                None if got == 0 => return Err(Error::parse(origin, no + 1, "word has no vector components")),
                None => dim = Some(got),
                _ => {}
            }
            if let Some(first) = seen.insert(word.to_owned(), no + 1) {
                return Err(Error::DuplicateWord {
                    word: word.to_owned(),
                    first,
                    second: no + 1,
                });
            }
            vocab.push(word.to_owned());
            Ok(())
        };

        if let Some((no, line)) = pending.take() {
            handle(no, &line)?;
        }
        for (no, line) in lines {
            let line = line.map_err(|e| Error::io(origin, e))?;
            handle(no, &line)?;
        }

        if let Some((count, _)) = header {
            if count != vocab.len() {
                return Err(Error::parse(
                    origin,
                    1,
                    format!("header declares {count} words, file has {}", vocab.len()),
                ));
            }
        }
        let dim = match dim {
            Some(d) if d > 0 && !vocab.is_empty() => d,
            _ => return Err(Error::Degenerate(format!("{}: no word vectors", origin.display()))),
        };
        let vectors = DMatrix::from_row_slice(vocab.len(), dim, &values);
        Self::new(vocab, vectors)
    }

    /// Writes the text format with every component rounded to nine
    /// significant digits.
    pub fn write_to<W: Write>(&self, mut out: W, headered: bool) -> std::io::Result<()> {
        if headered {
            writeln!(out, "{} {}", self.len(), self.dim())?;
        }
        for (i, word) in self.vocab.iter().enumerate() {
            out.write_all(word.as_bytes())?;
            for v in self.vectors.row(i).iter() {
                out.write_all(b" ")?;
                write_component(&mut out, *v)?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

/// Shortest text for `v` rounded to nine significant digits; exponent
/// notation outside `[1e-4, 1e15)`.
fn write_component<W: Write>(out: &mut W, v: f64) -> std::io::Result<()> {
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if rounded == 0.0 || (1e-4..1e15).contains(&mag) {
        write!(out, "{}", rounded)
    } else {
        write!(out, "{:e}", rounded)
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let count = fields.next()?.parse().ok()?;
    let dim = fields.next()?.parse().ok()?;
    if fields.next().is_some() {
        return None;
    }
    Some((count, dim))
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingSpace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingSpace::read_from(BufReader::new(file), format, path)
}

pub fn save_embeddings(space: &EmbeddingSpace, path: &Path, headered: bool) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    space
        .write_to(BufWriter::new(file), headered)
        .map_err(|e| Error::io(path, e))
}

/// Word × attribute norm matrix with its category, domain and gold-cluster
/// annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct NormDataset {
    words: Vec<String>,
    categories: Vec<String>,
    attributes: Vec<String>,
    domains: Vec<String>,
    matrix: DMatrix<f64>,
    gold_clusters: Option<Vec<u32>>,
}

impl NormDataset {
    pub fn new(
        words: Vec<String>,
        categories: Vec<String>,
        attributes: Vec<String>,
        domains: Vec<String>,
        matrix: DMatrix<f64>,
        gold_clusters: Option<Vec<u32>>,
    ) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::Degenerate("norm dataset has no words".into()));
        }
        if attributes.is_empty() {
            return Err(Error::InvalidArgument("norm dataset has no attributes".into()));
        }
        if matrix.nrows() != words.len() || matrix.ncols() != attributes.len() {
            return Err(Error::shape(
                format!("{}x{}", words.len(), attributes.len()),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        if categories.len() != words.len() {
            return Err(Error::shape(
                format!("{} categories", words.len()),
                format!("{} categories", categories.len()),
            ));
        }
        if domains.len() != attributes.len() {
            return Err(Error::shape(
                format!("{} domains", attributes.len()),
                format!("{} domains", domains.len()),
            ));
        }
        if let Some(gold) = &gold_clusters {
            if gold.len() != words.len() {
                return Err(Error::shape(
                    format!("{} gold clusters", words.len()),
                    format!("{} gold clusters", gold.len()),
                ));
            }
            if gold.contains(&0) {
                return Err(Error::InvalidArgument("gold cluster ids start at 1".into()));
            }
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite norm value".into()));
        }
        check_unique(&words, "word")?;
        check_unique(&attributes, "attribute")?;
        Ok(Self {
            words,
            categories,
            attributes,
            domains,
            matrix,
            gold_clusters,
        })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    /// Domain of each attribute, parallel to [`attributes`](Self::attributes).
    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn gold_clusters(&self) -> Option<&[u32]> {
        self.gold_clusters.as_deref()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// Restricts the dataset to the given words, keeping this dataset's row
    /// order.
    pub fn subset(&self, keep: &[String]) -> Result<Self> {
        let keep: HashSet<&str> = keep.iter().map(String::as_str).collect();
        let rows: Vec<usize> = (0..self.len())
            .filter(|&i| keep.contains(self.words[i].as_str()))
            .collect();
        let pick = |v: &[String]| rows.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        Self::new(
            pick(&self.words),
            pick(&self.categories),
            self.attributes.clone(),
            self.domains.clone(),
            self.matrix.select_rows(rows.iter()),
            self.gold_clusters
                .as_ref()
                .map(|g| rows.iter().map(|&i| g[i]).collect()),
        )
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "word\tcategory")?;
        for a in &self.attributes {
            write!(out, "\t{a}")?;
        }
        writeln!(out)?;
        for (i, word) in self.words.iter().enumerate() {
            write!(out, "{word}\t{}", self.categories[i])?;
            for v in self.matrix.row(i).iter() {
                write!(out, "\t{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()
    }

    pub fn write_domain_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (a, d) in self.attributes.iter().zip(&self.domains) {
            writeln!(out, "{a}\t{d}")?;
        }
        out.flush()
    }

    pub fn write_cluster_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        if let Some(gold) = &self.gold_clusters {
            for (w, c) in self.words.iter().zip(gold) {
                writeln!(out, "{w}\t{c}")?;
            }
        }
        out.flush()
    }
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashMap::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if let Some(first) = seen.insert(name.as_str(), i) {
            return Err(Error::InvalidArgument(format!(
                "duplicate {what} {name:?} (entries {} and {})",
                first + 1,
                i + 1
            )));
        }
    }
    Ok(())
}

/// Paths making up one norms dataset on disk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormPaths {
    pub norms: PathBuf,
    /// `attribute<TAB>domain`; when absent the canonical inventory is used
    /// if every attribute belongs to it.
    pub domains: Option<PathBuf>,
    /// `word<TAB>cluster_id`
    pub clusters: Option<PathBuf>,
}

impl NormPaths {
    pub fn new(norms: impl Into<PathBuf>) -> Self {
        Self {
            norms: norms.into(),
            ..Self::default()
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(path, e))?;
    Ok(s)
}

/// Data rows of a TSV file as `(line number, fields)`, skipping blank lines.
fn tsv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').collect()))
}

pub fn load_norms(paths: &NormPaths) -> Result<NormDataset> {
    let path = paths.norms.as_path();
    let text = read_text(path)?;
    let mut rows = tsv_rows(&text);
    let (_, header) = rows
        .next()
        .ok_or_else(|| Error::Degenerate(format!("{}: empty norms file", path.display())))?;
    if header.len() < 3
        || !header[0].trim().eq_ignore_ascii_case("word")
        || !header[1].trim().eq_ignore_ascii_case("category")
    {
        return Err(Error::parse(
            path,
            1,
            "header must be word<TAB>category<TAB>attribute...",
        ));
    }
    let attributes: Vec<String> = header[2..].iter().map(|s| s.trim().to_owned()).collect();
    let width = header.len();

    let mut words = Vec::new();
    let mut categories = Vec::new();
    let mut values = Vec::new();
    for (line, fields) in rows {
        if fields.len() != width {
            return Err(Error::parse(
                path,
                line,
                format!("expected {width} columns, found {}", fields.len()),
            ));
        }
        words.push(fields[0].trim().to_owned());
        categories.push(fields[1].trim().to_owned());
        for f in &fields[2..] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line, format!("non-numeric norm value {f:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line, format!("non-finite norm value {f:?}")));
            }
            values.push(v);
        }
    }
    if words.is_empty() {
        return Err(Error::Degenerate(format!("{}: no norm rows", path.display())));
    }
    let matrix = DMatrix::from_row_slice(words.len(), attributes.len(), &values);

    let domains = match &paths.domains {
        Some(p) => load_domain_map(p, &attributes)?,
        None => attributes
            .iter()
            .map(|a| schema::domain_of(a).unwrap_or(UNASSIGNED_DOMAIN).to_owned())
            .collect(),
    };
    let gold = match &paths.clusters {
        Some(p) => Some(load_cluster_map(p, &words)?),
        None => None,
    };
    NormDataset::new(words, categories, attributes, domains, matrix, gold)
}

fn load_domain_map(path: &Path, attributes: &[String]) -> Result<Vec<String>> {
    let text = read_text(path)?;
    let mut map = BTreeMap::new();
    for (line, fields) in tsv_rows(&text) {
        if fields.len() != 2 {
            return Err(Error::parse(path, line, "expected attribute<TAB>domain"));
        }
        let (attr, domain) = (fields[0].trim(), fields[1].trim());
        if !attributes.iter().any(|a| a == attr) {
            return Err(Error::parse(path, line, format!("unknown attribute {attr:?}")));
        }
        if map.insert(attr.to_owned(), domain.to_owned()).is_some() {
            return Err(Error::parse(path, line, format!("attribute {attr:?} listed twice")));
        }
    }
    attributes
        .iter()
        .map(|a| {
            map.remove(a)
                .ok_or_else(|| Error::parse(path, 0, format!("attribute {a:?} has no domain")))
        })
        .collect()
}

fn load_cluster_map(path: &Path, words: &[String]) -> Result<Vec<u32>> {
    let text = read_text(path)?;
    let known: HashSet<&str> = words.iter().map(String::as_str).collect();
    let mut map = HashMap::new();
    for (line, fields) in tsv_rows(&text) {
        if fields.len() != 2 {
            return Err(Error::parse(path, line, "expected word<TAB>cluster_id"));
        }
        let word = fields[0].trim();
        let id: u32 = fields[1]
            .trim()
            .parse()
            .ok()
            .filter(|&id| id >= 1)
            .ok_or_else(|| Error::parse(path, line, format!("invalid cluster id {:?}", fields[1])))?;
        if !known.contains(word) {
            return Err(Error::parse(path, line, format!("word {word:?} is not in the norms")));
        }
        if map.insert(word.to_owned(), id).is_some() {
            return Err(Error::parse(path, line, format!("word {word:?} listed twice")));
        }
    }
    words
        .iter()
        .map(|w| {
            map.get(w)
                .copied()
                .ok_or_else(|| Error::parse(path, 0, format!("word {w:?} has no gold cluster")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CasePolicy {
    #[default]
    Sensitive,
    /// Compare lowercased forms. A norm word without an exact match takes the
    /// first vocabulary entry (file order) that folds to the same form.
    Lowercase,
}

impl FromStr for CasePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sensitive" => Ok(Self::Sensitive),
            "lowercase" => Ok(Self::Lowercase),
            other => Err(Error::InvalidArgument(format!(
                "unknown case policy {other:?} (expected sensitive or lowercase)"
            ))),
        }
    }
}

impl std::fmt::Display for CasePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sensitive => "sensitive",
            Self::Lowercase => "lowercase",
        })
    }
}

/// Row-aligned embedding and norm matrices over the shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedData {
    pub words: Vec<String>,
    pub categories: Vec<String>,
    /// `n × d` embedding rows.
    pub inputs: DMatrix<f64>,
    /// `n × p` norm rows.
    pub targets: DMatrix<f64>,
    /// Norm words with no embedding, in norm order.
    pub missing: Vec<String>,
    pub gold_clusters: Option<Vec<u32>>,
}

impl AlignedData {
    /// Aligned data from bare matrices; words are named `w0`, `w1`, ...
    pub fn from_matrices(inputs: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::shape(
                format!("{} target rows", inputs.nrows()),
                format!("{} target rows", targets.nrows()),
            ));
        }
        if inputs.nrows() == 0 {
            return Err(Error::Degenerate("no rows".into()));
        }
        let n = inputs.nrows();
        Ok(Self {
            words: (0..n).map(|i| format!("w{i}")).collect(),
            categories: vec![String::new(); n],
            inputs,
            targets,
            missing: Vec::new(),
            gold_clusters: None,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.ncols()
    }

    /// The same data without row `i`.
    pub fn without_row(&self, i: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.inputs.clone().remove_row(i), self.targets.clone().remove_row(i))
    }
}

pub fn align(space: &EmbeddingSpace, norms: &NormDataset, policy: CasePolicy) -> Result<AlignedData> {
    let folded: HashMap<String, usize> = match policy {
        CasePolicy::Sensitive => HashMap::new(),
        CasePolicy::Lowercase => {
            let mut m = HashMap::new();
            for (i, w) in space.vocab().iter().enumerate() {
                m.entry(w.to_lowercase()).or_insert(i);
            }
            m
        }
    };
    let mut rows = Vec::new();
    let mut space_rows = Vec::new();
    let mut missing = Vec::new();
    for (i, word) in norms.words().iter().enumerate() {
        let hit = space.index_of(word).or_else(|| match policy {
            CasePolicy::Sensitive => None,
            CasePolicy::Lowercase => folded.get(&word.to_lowercase()).copied(),
        });
        match hit {
            Some(j) => {
                rows.push(i);
                space_rows.push(j);
            }
            None => missing.push(word.clone()),
        }
    }
    if rows.is_empty() {
        return Err(Error::Degenerate(format!(
            "no overlap between the {} norm words and the {}-word embedding vocabulary",
            norms.len(),
            space.len()
        )));
    }
    Ok(AlignedData {
        words: rows.iter().map(|&i| norms.words()[i].clone()).collect(),
        categories: rows.iter().map(|&i| norms.categories()[i].clone()).collect(),
        inputs: space.vectors().select_rows(space_rows.iter()),
        targets: norms.matrix().select_rows(rows.iter()),
        missing,
        gold_clusters: norms.gold_clusters().map(|g| rows.iter().map(|&i| g[i]).collect()),
    })
}
