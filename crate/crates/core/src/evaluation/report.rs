use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{aggregate, column_correlations, row_correlations, GroupMean};
use crate::data::AlignedData;
use crate::error::{Error, Result};
use crate::table::{csv_err, Table};

/// Column-wise and row-wise correlations between estimated and original
/// norms, with their group means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub attributes: Vec<String>,
    pub domains: Vec<String>,
    pub per_attribute: Vec<Option<f64>>,
    pub words: Vec<String>,
    pub categories: Vec<String>,
    pub per_word: Vec<Option<f64>>,
    pub domain_means: Vec<GroupMean>,
    pub category_means: Vec<GroupMean>,
    /// Mean over defined per-attribute values.
    pub overall_attribute: GroupMean,
    /// Mean over defined per-word values.
    pub overall_word: GroupMean,
}

impl CorrelationReport {
    pub fn build(
        estimated: &DMatrix<f64>,
        data: &AlignedData,
        attributes: &[String],
        domains: &[String],
    ) -> Result<Self> {
        if attributes.len() != data.output_dim() || domains.len() != attributes.len() {
            return Err(Error::shape(
                format!("{} attribute names and domains", data.output_dim()),
                format!("{} names, {} domains", attributes.len(), domains.len()),
            ));
        }
        let per_attribute = column_correlations(estimated, &data.targets)?;
        let per_word = row_correlations(estimated, &data.targets)?;
        Ok(Self {
            attributes: attributes.to_vec(),
            domains: domains.to_vec(),
            domain_means: aggregate(&per_attribute, domains)?,
            category_means: aggregate(&per_word, &data.categories)?,
            overall_attribute: GroupMean::of("all", &per_attribute),
            overall_word: GroupMean::of("all", &per_word),
            per_attribute,
            words: data.words.clone(),
            categories: data.categories.clone(),
            per_word,
        })
    }

    pub fn attribute_csv(&self) -> Result<String> {
        let mut w = Table::new(&["attribute", "domain", "rho"]);
        for ((a, d), r) in self.attributes.iter().zip(&self.domains).zip(&self.per_attribute) {
            w.row([a.clone(), d.clone(), fmt_opt(*r)])?;
        }
        w.finish()
    }

    pub fn word_csv(&self) -> Result<String> {
        let mut w = Table::new(&["word", "category", "rho"]);
        for ((word, c), r) in self.words.iter().zip(&self.categories).zip(&self.per_word) {
            w.row([word.clone(), c.clone(), fmt_opt(*r)])?;
        }
        w.finish()
    }

    pub fn domain_csv(&self) -> Result<String> {
        group_csv("domain", &self.domain_means)
    }

    pub fn category_csv(&self) -> Result<String> {
        group_csv("category", &self.category_means)
    }
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub label: String,
    pub method: String,
    pub n_words: usize,
    pub n_missing: usize,
    pub failed_folds: usize,
    pub attribute_mean_rho: Option<f64>,
    pub attributes_defined: usize,
    pub attributes_excluded: usize,
    pub word_mean_rho: Option<f64>,
    pub words_defined: usize,
    pub words_excluded: usize,
    pub mean_heldout_mse: Option<f64>,
}

const SUMMARY_HEADER: [&str; 12] = [
    "label",
    "method",
    "n_words",
    "n_missing",
    "failed_folds",
    "attribute_mean_rho",
    "attributes_defined",
    "attributes_excluded",
    "word_mean_rho",
    "words_defined",
    "words_excluded",
    "mean_heldout_mse",
];

impl ProbeSummary {
    pub fn csv(rows: &[ProbeSummary]) -> Result<String> {
        let mut w = Table::new(&SUMMARY_HEADER);
        for s in rows {
            w.row([
                s.label.clone(),
                s.method.clone(),
                s.n_words.to_string(),
                s.n_missing.to_string(),
                s.failed_folds.to_string(),
                fmt_opt(s.attribute_mean_rho),
                s.attributes_defined.to_string(),
                s.attributes_excluded.to_string(),
                fmt_opt(s.word_mean_rho),
                s.words_defined.to_string(),
                s.words_excluded.to_string(),
                fmt_opt(s.mean_heldout_mse),
            ])?;
        }
        w.finish()
    }

    /// Parses a `summary.csv` written by [`ProbeSummary::csv`].
    pub fn parse_csv(text: &str) -> Result<Vec<ProbeSummary>> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(csv_err)?.clone();
        if header.iter().ne(SUMMARY_HEADER.iter().copied()) {
            return Err(Error::InvalidArgument("not a summary.csv header".into()));
        }
        let mut out = Vec::new();
        for record in reader.records() {
            let r = record.map_err(csv_err)?;
            let int = |i: usize| -> Result<usize> {
                r[i].parse().map_err(|_| {
                    Error::InvalidArgument(format!("summary column {}: bad integer {:?}", SUMMARY_HEADER[i], &r[i]))
                })
            };
            let real = |i: usize| -> Result<Option<f64>> {
                match &r[i] {
                    "NA" => Ok(None),
                    s => s.parse().map(Some).map_err(|_| {
                        Error::InvalidArgument(format!("summary column {}: bad number {s:?}", SUMMARY_HEADER[i]))
                    }),
                }
            };
            out.push(ProbeSummary {
                label: r[0].to_owned(),
                method: r[1].to_owned(),
                n_words: int(2)?,
                n_missing: int(3)?,
                failed_folds: int(4)?,
                attribute_mean_rho: real(5)?,
                attributes_defined: int(6)?,
                attributes_excluded: int(7)?,
                word_mean_rho: real(8)?,
                words_defined: int(9)?,
                words_excluded: int(10)?,
                mean_heldout_mse: real(11)?,
            });
        }
        Ok(out)
    }
}

/// File names written by a probe run.
pub struct ReportFiles;

impl ReportFiles {
    pub const ATTRIBUTE: &'static str = "attribute.csv";
    pub const WORD: &'static str = "word.csv";
    pub const DOMAIN: &'static str = "domain.csv";
    pub const CATEGORY: &'static str = "category.csv";
    pub const SUMMARY: &'static str = "summary.csv";
    pub const BUNDLE: &'static str = "report.json";
    pub const ESTIMATES: &'static str = "estimates.txt";
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |v| v.to_string())
}

fn group_csv(kind: &str, means: &[GroupMean]) -> Result<String> {
    let mut w = Table::new(&[kind, "mean_rho", "defined", "excluded"]);
    for g in means {
        w.row([
            g.group.clone(),
            fmt_opt(g.mean),
            g.defined.to_string(),
            g.excluded.to_string(),
        ])?;
    }
    w.finish()
}
