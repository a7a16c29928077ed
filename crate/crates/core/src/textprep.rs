//! Text normalization, vocabulary construction and sparse feature matrices.
//!
//! The pipeline is normalize → tokenize → build vocabulary (training corpus
//! only) → weight. Three weighting modes are provided: the classic
//! `tf * ln(N/df)` form, the smoothed L2-normalized variant, and plain
//! binary presence. Row transformation is embarrassingly parallel; results
//! are assembled in input order, so output never depends on worker count.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::Dataset;
use crate::util::{fmt_g12, parse_g12};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("document references a column outside the vocabulary")]
    VocabMismatch,
    #[error("parse error at line {0}: {1}")]
    ParseError(u64, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TextError>;

/// Feature weighting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// `tf * ln(N / df)` with raw term counts.
    TfIdfWeka,
    /// `tf * (ln((1+N)/(1+df)) + 1)`, row L2-normalized afterwards.
    TfIdfSmoothL2,
    /// 1.0 whenever the term occurs.
    BinaryPresence,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::TfIdfWeka => "tfidf_weka",
            Weighting::TfIdfSmoothL2 => "tfidf_smooth_l2",
            Weighting::BinaryPresence => "binary_presence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tfidf_weka" => Some(Weighting::TfIdfWeka),
            "tfidf_smooth_l2" => Some(Weighting::TfIdfSmoothL2),
            "binary_presence" => Some(Weighting::BinaryPresence),
            _ => None,
        }
    }
}

/// Vectorization settings.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Vocabulary cap: keep this many terms with the highest document frequency.
    pub words_to_keep: usize,
    pub weighting: Weighting,
    pub lowercase: bool,
    pub min_token_length: usize,
    pub stopwords: Option<HashSet<String>>,
}

impl PipelineConfig {
    pub fn new(words_to_keep: usize) -> Self {
        Self {
            words_to_keep: words_to_keep.max(1),
            weighting: Weighting::TfIdfSmoothL2,
            lowercase: true,
            min_token_length: 1,
            stopwords: None,
        }
    }
}

/// Replaces URL-looking whitespace tokens with `URL`, strips everything but
/// letters and whitespace, lowercases, and collapses whitespace runs.
///
/// The operation is idempotent.
pub fn normalize_text(raw: &str) -> String {
    normalize_text_opts(raw, true)
}

pub fn normalize_text_opts(raw: &str, lowercase: bool) -> String {
    let mut cleaned = String::with_capacity(raw.len());
    for token in raw.split_whitespace() {
        if !cleaned.is_empty() {
            cleaned.push(' ');
        }
        if is_url_token(token) {
            cleaned.push_str("URL");
        } else {
            cleaned.push_str(token);
        }
    }
    // Punctuation, digits and symbols are deleted (not blanked), so
    // intra-word marks collapse: "don't" -> "dont".
    let mut stripped = String::with_capacity(cleaned.len());
    for c in cleaned.chars() {
        if c.is_alphabetic() || c.is_whitespace() {
            stripped.push(c);
        }
    }
    let cased = if lowercase { stripped.to_lowercase() } else { stripped };
    let mut out = String::with_capacity(cased.len());
    for token in cased.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

fn is_url_token(token: &str) -> bool {
    if token.contains("://") {
        return true;
    }
    let bytes = token.as_bytes();
    bytes.len() >= 4 && bytes[..4].eq_ignore_ascii_case(b"www.")
}

/// Whitespace tokenization over already-normalized text, applying the
/// length and stopword filters from the config.
pub fn tokenize(normalized: &str, cfg: &PipelineConfig) -> Vec<String> {
    normalized
        .split_whitespace()
        .filter(|t| t.chars().count() >= cfg.min_token_length)
        .filter(|t| cfg.stopwords.as_ref().is_none_or(|s| !s.contains(*t)))
        .map(str::to_string)
        .collect()
}

/// Term table fixed after fitting: column order, document frequencies and
/// the corpus size the frequencies were counted over.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    doc_freq: Vec<u32>,
    corpus_size: usize,
}

impl Vocabulary {
    /// Assembles a vocabulary from parts already in column order.
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>, corpus_size: usize) -> Self {
        assert_eq!(terms.len(), doc_freq.len());
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { terms, index, doc_freq, corpus_size }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, column: u32) -> u32 {
        self.doc_freq[column as usize]
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    /// Writes `corpus_size` on the first line, then `term<TAB>doc_freq`
    /// rows in column order.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.corpus_size)?;
        for (term, df) in self.terms.iter().zip(&self.doc_freq) {
            writeln!(w, "{term}\t{df}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| TextError::ParseError(1, "empty vocabulary file".into()))??;
        let corpus_size: usize = header
            .trim()
            .parse()
            .map_err(|_| TextError::ParseError(1, "bad corpus size".into()))?;
        let mut terms = Vec::new();
        let mut doc_freq = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (term, df) = line
                .split_once('\t')
                .ok_or_else(|| TextError::ParseError(i as u64 + 2, "missing tab".into()))?;
            let df: u32 = df
                .parse()
                .map_err(|_| TextError::ParseError(i as u64 + 2, "bad doc freq".into()))?;
            terms.push(term.to_string());
            doc_freq.push(df);
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Self { terms, index, doc_freq, corpus_size })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        buf
    }
}

/// Sorted nonzero (column, weight) pairs for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Entries must be sorted by column, unique, and nonzero.
    pub fn new(entries: Vec<(u32, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w != 0.0));
        Self { entries }
    }

    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, column: u32) -> f64 {
        match self.entries.binary_search_by_key(&column, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn max_column(&self) -> Option<u32> {
        self.entries.last().map(|e| e.0)
    }
}

/// Sparse design matrix: one row per document plus per-row class indices.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    rows: Vec<SparseVector>,
    labels: Vec<u32>,
    class_labels: Vec<String>,
    vocab: Arc<Vocabulary>,
}

impl FeatureMatrix {
    pub fn new(
        rows: Vec<SparseVector>,
        labels: Vec<u32>,
        class_labels: Vec<String>,
        vocab: Arc<Vocabulary>,
    ) -> Self {
        assert_eq!(rows.len(), labels.len(), "row/label count mismatch");
        assert!(labels.iter().all(|&l| (l as usize) < class_labels.len()));
        Self { rows, labels, class_labels, vocab }
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn n_columns(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// Writes `label_index col:weight col:weight …`, one line per row.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (row, label) in self.rows.iter().zip(&self.labels) {
            write!(w, "{label}")?;
            for &(col, weight) in row.entries() {
                write!(w, " {col}:{}", fmt_g12(weight))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(
        r: R,
        class_labels: Vec<String>,
        vocab: Arc<Vocabulary>,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let line_no = i as u64 + 1;
            let mut parts = line.split(' ');
            let label: u32 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| TextError::ParseError(line_no, "bad label index".into()))?;
            let mut entries = Vec::new();
            for tok in parts {
                let (col, weight) = tok
                    .split_once(':')
                    .ok_or_else(|| TextError::ParseError(line_no, "bad entry".into()))?;
                let col: u32 = col
                    .parse()
                    .map_err(|_| TextError::ParseError(line_no, "bad column".into()))?;
                let weight = parse_g12(weight)
                    .ok_or_else(|| TextError::ParseError(line_no, "bad weight".into()))?;
                if col as usize >= vocab.len() {
                    return Err(TextError::VocabMismatch);
                }
                entries.push((col, weight));
            }
            rows.push(SparseVector::new(entries));
            labels.push(label);
        }
        Ok(Self::new(rows, labels, class_labels, vocab))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec cannot fail");
        buf
    }
}

/// Keeps the `words_to_keep` terms with the highest document frequency,
/// ties broken lexicographically; columns are assigned in that order.
pub fn build_vocabulary(docs: &[Vec<String>], cfg: &PipelineConfig) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        let distinct: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u32)> = df.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cfg.words_to_keep);

    let terms: Vec<String> = ranked.iter().map(|(t, _)| (*t).to_string()).collect();
    let doc_freq: Vec<u32> = ranked.iter().map(|&(_, d)| d).collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vocabulary { terms, index, doc_freq, corpus_size: docs.len() })
}

/// Weights one tokenized document against a fitted vocabulary.
/// Out-of-vocabulary terms are ignored.
pub fn transform_document(
    tokens: &[String],
    vocab: &Vocabulary,
    weighting: Weighting,
) -> SparseVector {
    let mut tf: HashMap<u32, u32> = HashMap::new();
    for token in tokens {
        if let Some(col) = vocab.column(token) {
            *tf.entry(col).or_insert(0) += 1;
        }
    }
    let mut cols: Vec<u32> = tf.keys().copied().collect();
    cols.sort_unstable();

    let n = vocab.corpus_size() as f64;
    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(cols.len());
    for col in cols {
        let count = f64::from(tf[&col]);
        let weight = match weighting {
            Weighting::TfIdfWeka => {
                let df = f64::from(vocab.doc_freq(col));
                count * (n / df).ln()
            }
            Weighting::TfIdfSmoothL2 => {
                let df = f64::from(vocab.doc_freq(col));
                count * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
            }
            Weighting::BinaryPresence => 1.0,
        };
        if weight != 0.0 {
            entries.push((col, weight));
        }
    }
    if weighting == Weighting::TfIdfSmoothL2 {
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for entry in &mut entries {
                entry.1 /= norm;
            }
        }
    }
    SparseVector::new(entries)
}

/// Transforms a tokenized corpus row by row (parallel, order-preserving).
pub fn tfidf_transform(
    docs: &[Vec<String>],
    vocab: &Vocabulary,
    weighting: Weighting,
) -> Vec<SparseVector> {
    docs.par_iter()
        .map(|tokens| transform_document(tokens, vocab, weighting))
        .collect()
}

fn tokenize_dataset(data: &Dataset, cfg: &PipelineConfig) -> Vec<Vec<String>> {
    data.documents()
        .par_iter()
        .map(|d| tokenize(&normalize_text_opts(&d.text, cfg.lowercase), cfg))
        .collect()
}

fn label_indices(data: &Dataset) -> Vec<u32> {
    data.documents()
        .iter()
        .map(|d| data.label_index(&d.label).expect("label set covers documents") as u32)
        .collect()
}

/// Full fit+transform over a training dataset: normalize, tokenize, build
/// the vocabulary and weight every row.
pub fn vectorize_dataset(data: &Dataset, cfg: &PipelineConfig) -> Result<FeatureMatrix> {
    if data.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let tokenized = tokenize_dataset(data, cfg);
    let vocab = Arc::new(build_vocabulary(&tokenized, cfg)?);
    let rows = tfidf_transform(&tokenized, &vocab, cfg.weighting);
    Ok(FeatureMatrix::new(rows, label_indices(data), data.labels().to_vec(), vocab))
}

/// Applies an already-fitted vocabulary to held-out data. The vocabulary is
/// not refit; unseen terms vanish.
pub fn vectorize_with_vocab(
    data: &Dataset,
    cfg: &PipelineConfig,
    vocab: &Arc<Vocabulary>,
) -> Result<FeatureMatrix> {
    if data.is_empty() {
        return Err(TextError::EmptyCorpus);
    }
    let tokenized = tokenize_dataset(data, cfg);
    let rows = tfidf_transform(&tokenized, vocab, cfg.weighting);
    Ok(FeatureMatrix::new(
        rows,
        label_indices(data),
        data.labels().to_vec(),
        Arc::clone(vocab),
    ))
}
