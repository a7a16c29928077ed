//! Labeled text corpora: CSV/ARFF ingestion, stratified splitting and
//! minority-class upsampling.
//!
//! A [`Dataset`] is immutable once constructed and safe to share across
//! threads for concurrent reads.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("malformed row at line {0}")]
    MalformedRow(u64),
    #[error("dataset contains no documents")]
    EmptyDataset,
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("unsupported ARFF shape: {0}")]
    UnsupportedArff(String),
    #[error("ARFF parse error at line {0}: {1}")]
    ParseError(u64, String),
    #[error("class `{0}` has fewer than two documents")]
    ClassTooSmall(String),
    #[error("train fraction must lie in (0, 1), got {0}")]
    InvalidFraction(f64),
    #[error("dataset has a single class")]
    SingleClass,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// One labeled raw-text record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: String,
}

/// An ordered collection of documents plus the fixed set of class names.
///
/// The label order is fixed at load time (first appearance for CSV, the
/// nominal declaration order for ARFF) and preserved by every operation
/// that derives a new dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    documents: Vec<Document>,
    labels: Vec<String>,
}

impl Dataset {
    /// Builds a dataset, deriving the label set in first-appearance order.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(CorpusError::EmptyDataset);
        }
        let mut labels = Vec::new();
        let mut seen_labels = HashSet::new();
        let mut seen_ids = HashSet::new();
        for doc in &documents {
            if !seen_ids.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
            if seen_labels.insert(doc.label.clone()) {
                labels.push(doc.label.clone());
            }
        }
        Ok(Self { documents, labels })
    }

    /// Builds a dataset with an explicit label order.
    ///
    /// Every document label must appear in `labels`.
    pub fn with_labels(documents: Vec<Document>, labels: Vec<String>) -> Result<Self> {
        if documents.is_empty() {
            return Err(CorpusError::EmptyDataset);
        }
        let set: HashSet<&str> = labels.iter().map(|s| s.as_str()).collect();
        let mut seen_ids = HashSet::new();
        for doc in &documents {
            if !seen_ids.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId(doc.id.clone()));
            }
            if !set.contains(doc.label.as_str()) {
                return Err(CorpusError::ParseError(0, format!("undeclared label `{}`", doc.label)));
            }
        }
        Ok(Self { documents, labels })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Per-class document counts, in label order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.labels.len()];
        for doc in &self.documents {
            let idx = self.label_index(&doc.label).expect("label set covers documents");
            counts[idx] += 1;
        }
        counts
    }
}

/// Options for CSV ingestion. RFC-4180 quoting, UTF-8.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

/// Loads a labeled dataset from a CSV file with a header row.
///
/// One document per data row, in file order; ids are the 1-based data row
/// numbers. The label set is built in first-appearance order.
pub fn load_csv(path: &Path, text_column: &str, label_column: &str) -> Result<Dataset> {
    load_csv_with(path, text_column, label_column, &CsvOptions::default())
}

pub fn load_csv_with(
    path: &Path,
    text_column: &str,
    label_column: &str,
    options: &CsvOptions,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .flexible(true)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let text_idx = headers
        .iter()
        .position(|h| h == text_column)
        .ok_or_else(|| CorpusError::MissingColumn(text_column.to_string()))?;
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| CorpusError::MissingColumn(label_column.to_string()))?;

    let mut documents = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row_no as u64 + 2, |p| p.line());
        let text = record
            .get(text_idx)
            .ok_or(CorpusError::MalformedRow(line))?;
        let label = record
            .get(label_idx)
            .ok_or(CorpusError::MalformedRow(line))?;
        if label.is_empty() {
            return Err(CorpusError::MalformedRow(line));
        }
        documents.push(Document {
            id: format!("row-{}", row_no + 1),
            text: text.to_string(),
            label: label.to_string(),
        });
    }
    Dataset::new(documents)
}

/// Loads a dataset from a minimal ARFF file.
///
/// Only the shape used for text classification is supported: one string
/// attribute (the document) and one nominal attribute (the class). The
/// label order is the nominal declaration order.
pub fn load_arff(path: &Path) -> Result<Dataset> {
    enum ArffAttr {
        Text,
        Class,
    }

    let content = fs::read_to_string(path)?;
    let mut attrs: Vec<ArffAttr> = Vec::new();
    let mut saw_relation = false;
    let mut in_data = false;
    let mut documents = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut text_pos = None;
    let mut class_pos = None;

    for (idx, raw_line) in content.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                saw_relation = true;
            } else if lower.starts_with("@attribute") {
                let rest = line["@attribute".len()..].trim();
                let (_name, type_part) = split_arff_attribute(rest)
                    .ok_or_else(|| CorpusError::ParseError(line_no, "bad @attribute".into()))?;
                let type_trim = type_part.trim();
                if type_trim.eq_ignore_ascii_case("string") {
                    if text_pos.is_some() {
                        return Err(CorpusError::UnsupportedArff(
                            "more than one string attribute".into(),
                        ));
                    }
                    text_pos = Some(attrs.len());
                    attrs.push(ArffAttr::Text);
                } else if type_trim.starts_with('{') && type_trim.ends_with('}') {
                    if class_pos.is_some() {
                        return Err(CorpusError::UnsupportedArff(
                            "more than one nominal attribute".into(),
                        ));
                    }
                    let inner = &type_trim[1..type_trim.len() - 1];
                    let values = split_arff_fields(inner, line_no)?
                        .into_iter()
                        .map(|v| v.trim().to_string())
                        .collect::<Vec<_>>();
                    if values.is_empty() {
                        return Err(CorpusError::ParseError(line_no, "empty nominal set".into()));
                    }
                    class_pos = Some(attrs.len());
                    labels = values;
                    attrs.push(ArffAttr::Class);
                } else {
                    return Err(CorpusError::UnsupportedArff(format!(
                        "attribute type `{type_trim}` (only string + nominal class supported)"
                    )));
                }
            } else if lower.starts_with("@data") {
                if !saw_relation {
                    return Err(CorpusError::ParseError(line_no, "@data before @relation".into()));
                }
                in_data = true;
            } else {
                return Err(CorpusError::ParseError(line_no, format!("unexpected `{line}`")));
            }
            continue;
        }

        if line.starts_with('{') {
            return Err(CorpusError::UnsupportedArff("sparse ARFF data rows".into()));
        }
        let text_pos = text_pos.ok_or_else(|| {
            CorpusError::UnsupportedArff("no string attribute declared".into())
        })?;
        let class_pos = class_pos.ok_or_else(|| {
            CorpusError::UnsupportedArff("no nominal class attribute declared".into())
        })?;
        let fields = split_arff_fields(line, line_no)?;
        if fields.len() != attrs.len() {
            return Err(CorpusError::ParseError(
                line_no,
                format!("expected {} fields, found {}", attrs.len(), fields.len()),
            ));
        }
        let label = fields[class_pos].trim().to_string();
        if label == "?" || !labels.contains(&label) {
            return Err(CorpusError::ParseError(line_no, format!("undeclared class `{label}`")));
        }
        let text = fields[text_pos].clone();
        documents.push(Document {
            id: format!("row-{}", documents.len() + 1),
            text: if text == "?" { String::new() } else { text },
            label,
        });
    }

    if !in_data {
        return Err(CorpusError::UnsupportedArff("missing @data section".into()));
    }
    if text_pos.is_none() || class_pos.is_none() {
        return Err(CorpusError::UnsupportedArff(
            "need one string attribute and one nominal class attribute".into(),
        ));
    }
    if documents.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    Dataset::with_labels(documents, labels)
}

/// Splits `@attribute NAME TYPE` into name and type, honoring quoted names.
fn split_arff_attribute(rest: &str) -> Option<(String, &str)> {
    let rest = rest.trim_start();
    let mut chars = rest.char_indices();
    let (quote, start) = match chars.next()? {
        (_, c @ ('\'' | '"')) => (Some(c), 1),
        _ => (None, 0),
    };
    if let Some(q) = quote {
        let mut prev_escape = false;
        for (i, c) in rest[1..].char_indices() {
            if prev_escape {
                prev_escape = false;
                continue;
            }
            if c == '\\' {
                prev_escape = true;
            } else if c == q {
                let name = rest[start..=i].to_string();
                return Some((name, &rest[i + 2..]));
            }
        }
        None
    } else {
        let split = rest.find(char::is_whitespace)?;
        Some((rest[..split].to_string(), &rest[split..]))
    }
}

/// Splits a comma-separated ARFF field list with single/double quoting and
/// backslash escapes. A quoted field containing commas parses as one field.
fn split_arff_fields(line: &str, line_no: u64) -> Result<Vec<String>> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut escape = false;
    for c in line.chars() {
        if escape {
            current.push(c);
            escape = false;
            continue;
        }
        match (quote, c) {
            (_, '\\') => escape = true,
            (Some(q), c) if c == q => quote = None,
            (Some(_), c) => current.push(c),
            (None, '\'' | '"') => quote = Some(c),
            (None, ',') => {
                fields.push(current.trim().to_string());
                current = String::new();
            }
            (None, c) => current.push(c),
        }
    }
    if quote.is_some() || escape {
        return Err(CorpusError::ParseError(line_no, "unterminated quote".into()));
    }
    fields.push(current.trim().to_string());
    Ok(fields)
}

/// Reproducible split parameters.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(CorpusError::InvalidFraction(train_fraction));
        }
        Ok(Self { train_fraction, seed })
    }
}

/// Stratified train/test split.
///
/// Each class contributes `floor(f * count)` documents to the first split,
/// plus possibly one more so the overall fraction lands as close to `f` as
/// possible. Extra documents go to classes sorted by name, in round-robin
/// order, restricted to classes with a fractional remainder. Every class
/// keeps at least one document on each side. Document order within each
/// split follows the parent dataset. Deterministic per seed.
pub fn stratified_split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(spec.train_fraction));
    }
    let f = spec.train_fraction;

    // Class -> document indices, visited in sorted-name order so both the
    // remainder assignment and the RNG stream are label-order independent.
    let mut by_class: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, doc) in data.documents.iter().enumerate() {
        by_class.entry(doc.label.as_str()).or_default().push(i);
    }
    let mut class_names: Vec<&str> = by_class.keys().copied().collect();
    class_names.sort_unstable();

    for name in &class_names {
        if by_class[name].len() < 2 {
            return Err(CorpusError::ClassTooSmall((*name).to_string()));
        }
    }

    let mut base = Vec::with_capacity(class_names.len());
    let mut can_take_extra = Vec::with_capacity(class_names.len());
    for name in &class_names {
        let n = by_class[name].len();
        let exact = f * n as f64;
        let mut floor = exact.floor() as usize;
        let mut frac = exact - floor as f64;
        // Snap float residue so exact-integer products never gain or lose
        // a document (that would break the < 1 deviation guarantee).
        if frac > 1.0 - 1e-9 {
            floor += 1;
            frac = 0.0;
        }
        // Both sides must see every class; since 0 < f < 1, clamping to
        // [1, n-1] keeps the per-class count within 1 of f * n.
        let clamped = floor.clamp(1, n - 1);
        base.push(clamped);
        can_take_extra.push(clamped == floor && frac > 1e-9 && clamped + 1 <= n - 1);
    }
    let base_total: usize = base.iter().sum();
    let max_extras = can_take_extra.iter().filter(|&&b| b).count();
    let desired = f * data.len() as f64;
    // Smallest extra count that brings the train total closest to f * N.
    let mut extras = 0usize;
    let mut best_gap = (base_total as f64 - desired).abs();
    for d in 1..=max_extras {
        let gap = ((base_total + d) as f64 - desired).abs();
        if gap < best_gap {
            best_gap = gap;
            extras = d;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_membership = vec![false; data.len()];
    let mut assigned_extras = 0usize;
    for (ci, name) in class_names.iter().enumerate() {
        let mut take = base[ci];
        if assigned_extras < extras && can_take_extra[ci] {
            take += 1;
            assigned_extras += 1;
        }
        let mut indices = by_class[name].clone();
        indices.shuffle(&mut rng);
        for &doc_idx in indices.iter().take(take) {
            train_membership[doc_idx] = true;
        }
    }

    let mut train_docs = Vec::new();
    let mut test_docs = Vec::new();
    for (i, doc) in data.documents.iter().enumerate() {
        if train_membership[i] {
            train_docs.push(doc.clone());
        } else {
            test_docs.push(doc.clone());
        }
    }
    let train = Dataset::with_labels(train_docs, data.labels.clone())?;
    let test = Dataset::with_labels(test_docs, data.labels.clone())?;
    Ok((train, test))
}

/// Balances class counts by duplicating minority-class documents, sampled
/// with replacement. Duplicates get fresh ids (`<id>#dupN`) and are appended
/// after the originals, class by class in label order. Deterministic per seed.
pub fn upsample_minority(data: &Dataset, seed: u64) -> Result<Dataset> {
    if data.labels.len() < 2 {
        return Err(CorpusError::SingleClass);
    }
    let counts = data.class_counts();
    let majority = *counts.iter().max().expect("non-empty label set");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = data.documents.clone();
    let mut dup_counts: HashMap<String, usize> = HashMap::new();
    for (ci, label) in data.labels.iter().enumerate() {
        let need = majority - counts[ci];
        if need == 0 {
            continue;
        }
        let pool: Vec<&Document> = data
            .documents
            .iter()
            .filter(|d| &d.label == label)
            .collect();
        for _ in 0..need {
            let source = pool[rng.random_range(0..pool.len())];
            let n = dup_counts.entry(source.id.clone()).or_insert(0);
            *n += 1;
            documents.push(Document {
                id: format!("{}#dup{}", source.id, n),
                text: source.text.clone(),
                label: source.label.clone(),
            });
        }
    }
    Dataset::with_labels(documents, data.labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn doc(id: &str, label: &str) -> Document {
        Document { id: id.into(), text: format!("text {id}"), label: label.into() }
    }

    fn dataset(spec: &[(usize, &str)]) -> Dataset {
        let mut docs = Vec::new();
        let mut k = 0;
        for &(n, label) in spec {
            for _ in 0..n {
                docs.push(doc(&format!("d{k}"), label));
                k += 1;
            }
        }
        Dataset::new(docs).unwrap()
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_three_rows_first_appearance_labels() {
        let f = write_temp("text,label\nhello,pos\nworld,neg\nagain,pos\n");
        let ds = load_csv(f.path(), "text", "label").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels(), &["pos".to_string(), "neg".to_string()]);
        assert_eq!(ds.documents()[0].text, "hello");
    }

    #[test]
    fn csv_header_only_is_empty() {
        let f = write_temp("text,label\n");
        assert!(matches!(load_csv(f.path(), "text", "label"), Err(CorpusError::EmptyDataset)));
    }

    #[test]
    fn csv_missing_label_cell_is_malformed() {
        let f = write_temp("text,label\nok,pos\nonly-text\n");
        match load_csv(f.path(), "text", "label") {
            Err(CorpusError::MalformedRow(line)) => assert_eq!(line, 3),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn csv_missing_column_reported() {
        let f = write_temp("text,label\nok,pos\n");
        match load_csv(f.path(), "body", "label") {
            Err(CorpusError::MissingColumn(c)) => assert_eq!(c, "body"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn csv_quoted_fields_and_custom_delimiter() {
        let f = write_temp("text;label\n\"a;b\";pos\nplain;neg\n");
        let opts = CsvOptions { delimiter: b';' };
        let ds = load_csv_with(f.path(), "text", "label", &opts).unwrap();
        assert_eq!(ds.documents()[0].text, "a;b");
    }

    #[test]
    fn arff_basic_shape() {
        let f = write_temp(
            "@relation reviews\n\
             @attribute text string\n\
             @attribute class {neg,pos}\n\
             @data\n\
             'great stuff',pos\n\
             'bad stuff',neg\n",
        );
        let ds = load_arff(f.path()).unwrap();
        assert_eq!(ds.labels(), &["neg".to_string(), "pos".to_string()]);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.documents()[0].text, "great stuff");
    }

    #[test]
    fn arff_without_class_attribute_unsupported() {
        let f = write_temp("@relation r\n@attribute text string\n@data\n'x'\n");
        assert!(matches!(load_arff(f.path()), Err(CorpusError::UnsupportedArff(_))));
    }

    #[test]
    fn arff_quoted_commas_stay_one_field() {
        let f = write_temp(
            "@relation r\n\
             @attribute text string\n\
             @attribute class {neg,pos}\n\
             @data\n\
             \"one, two, three\",pos\n\
             x,neg\n",
        );
        let ds = load_arff(f.path()).unwrap();
        assert_eq!(ds.documents()[0].text, "one, two, three");
    }

    #[test]
    fn arff_rejects_numeric_attributes() {
        let f = write_temp("@relation r\n@attribute size numeric\n@data\n1\n");
        assert!(matches!(load_arff(f.path()), Err(CorpusError::UnsupportedArff(_))));
    }

    #[test]
    fn arff_rejects_sparse_rows() {
        let f = write_temp(
            "@relation r\n@attribute text string\n@attribute class {a,b}\n@data\n{0 'x',1 a}\n",
        );
        assert!(matches!(load_arff(f.path()), Err(CorpusError::UnsupportedArff(_))));
    }

    #[test]
    fn split_exact_divisibility() {
        let ds = dataset(&[(50, "pos"), (50, "neg")]);
        let spec = SplitSpec::new(0.8, 7).unwrap();
        let (train, test) = stratified_split(&ds, &spec).unwrap();
        assert_eq!(train.len(), 80);
        assert_eq!(test.len(), 20);
        assert_eq!(train.class_counts(), vec![40, 40]);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = dataset(&[(13, "a"), (9, "b")]);
        let spec = SplitSpec::new(0.7, 99).unwrap();
        let (t1, _) = stratified_split(&ds, &spec).unwrap();
        let (t2, _) = stratified_split(&ds, &spec).unwrap();
        let ids1: Vec<_> = t1.documents().iter().map(|d| &d.id).collect();
        let ids2: Vec<_> = t2.documents().iter().map(|d| &d.id).collect();
        assert_eq!(ids1, ids2);
    }

    #[test]
    fn split_five_docs_single_class_with_other() {
        // floor(0.8 * 5) = 4 exactly; the five-doc class splits 4/1.
        let ds = dataset(&[(5, "a"), (5, "b")]);
        let spec = SplitSpec::new(0.8, 3).unwrap();
        let (train, test) = stratified_split(&ds, &spec).unwrap();
        assert_eq!(train.class_counts(), vec![4, 4]);
        assert_eq!(test.class_counts(), vec![1, 1]);
    }

    #[test]
    fn split_partitions_documents() {
        let ds = dataset(&[(11, "a"), (7, "b"), (5, "c")]);
        let spec = SplitSpec::new(0.6, 42).unwrap();
        let (train, test) = stratified_split(&ds, &spec).unwrap();
        let mut ids: Vec<String> = train
            .documents()
            .iter()
            .chain(test.documents())
            .map(|d| d.id.clone())
            .collect();
        ids.sort();
        let mut expected: Vec<String> = ds.documents().iter().map(|d| d.id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected);
        assert_eq!(train.labels(), ds.labels());
        assert_eq!(test.labels(), ds.labels());
    }

    #[test]
    fn split_rejects_tiny_class() {
        let ds = dataset(&[(5, "a"), (1, "b")]);
        let spec = SplitSpec::new(0.8, 1).unwrap();
        match stratified_split(&ds, &spec) {
            Err(CorpusError::ClassTooSmall(l)) => assert_eq!(l, "b"),
            other => panic!("expected ClassTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn split_per_class_counts_within_one_of_fraction() {
        for seed in 0..20u64 {
            let ds = dataset(&[(13, "a"), (29, "b"), (7, "c")]);
            let spec = SplitSpec::new(0.65, seed).unwrap();
            let (train, _) = stratified_split(&ds, &spec).unwrap();
            let counts = train.class_counts();
            for (got, n) in counts.iter().zip([13usize, 29, 7]) {
                let exact = 0.65 * n as f64;
                assert!((*got as f64 - exact).abs() < 1.0, "count {got} vs {exact}");
            }
        }
    }

    #[test]
    fn split_counts_stay_within_one_for_arbitrary_fractions() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(
                    proptest::collection::vec(2usize..60, 2..5),
                    0.05f64..0.95,
                    proptest::num::u64::ANY,
                ),
                |(counts, fraction, seed)| {
                    let spec_classes: Vec<(usize, String)> = counts
                        .iter()
                        .enumerate()
                        .map(|(i, &n)| (n, format!("class{i}")))
                        .collect();
                    let mut docs = Vec::new();
                    let mut k = 0;
                    for (n, label) in &spec_classes {
                        for _ in 0..*n {
                            docs.push(doc(&format!("d{k}"), label));
                            k += 1;
                        }
                    }
                    let ds = Dataset::new(docs).unwrap();
                    let spec = SplitSpec::new(fraction, seed).unwrap();
                    let (train, test) = stratified_split(&ds, &spec).unwrap();
                    prop_assert_eq!(train.len() + test.len(), ds.len());
                    for (got, (n, _)) in train.class_counts().iter().zip(&spec_classes) {
                        let exact = fraction * *n as f64;
                        prop_assert!(
                            (*got as f64 - exact).abs() < 1.0,
                            "class count {} vs exact {}",
                            got,
                            exact
                        );
                    }
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn upsample_amazon_shape() {
        let ds = dataset(&[(8435, "neg"), (19897, "pos")]);
        let up = upsample_minority(&ds, 5).unwrap();
        assert_eq!(up.class_counts(), vec![19897, 19897]);
    }

    #[test]
    fn upsample_balanced_is_identity() {
        let ds = dataset(&[(4, "a"), (4, "b")]);
        let up = upsample_minority(&ds, 9).unwrap();
        assert_eq!(up.len(), ds.len());
        let ids: Vec<_> = up.documents().iter().map(|d| &d.id).collect();
        let expected: Vec<_> = ds.documents().iter().map(|d| &d.id).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn upsample_three_classes() {
        let ds = dataset(&[(5, "a"), (5, "b"), (10, "c")]);
        let up = upsample_minority(&ds, 11).unwrap();
        assert_eq!(up.class_counts(), vec![10, 10, 10]);
    }

    #[test]
    fn upsample_single_class_rejected() {
        let ds = dataset(&[(4, "only")]);
        assert!(matches!(upsample_minority(&ds, 0), Err(CorpusError::SingleClass)));
    }

    #[test]
    fn upsample_preserves_originals_and_labels() {
        let ds = dataset(&[(3, "a"), (8, "b")]);
        let up = upsample_minority(&ds, 21).unwrap();
        let originals: HashSet<&str> = ds.documents().iter().map(|d| d.id.as_str()).collect();
        let kept: HashSet<&str> = up
            .documents()
            .iter()
            .map(|d| d.id.as_str())
            .filter(|id| originals.contains(id))
            .collect();
        assert_eq!(kept.len(), originals.len());
        for d in up.documents() {
            assert!(ds.labels().contains(&d.label));
        }
    }

    #[test]
    fn upsample_is_deterministic() {
        let ds = dataset(&[(3, "a"), (9, "b")]);
        let a = upsample_minority(&ds, 77).unwrap();
        let b = upsample_minority(&ds, 77).unwrap();
        let ids_a: Vec<_> = a.documents().iter().map(|d| &d.id).collect();
        let ids_b: Vec<_> = b.documents().iter().map(|d| &d.id).collect();
        assert_eq!(ids_a, ids_b);
    }
}
